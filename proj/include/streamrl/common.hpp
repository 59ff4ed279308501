#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace streamrl {

// Flat, index-aligned parameter storage. Weights, gradients, traces and
// moment estimates for one network spec all share the same layout.
using ParamVector = std::vector<double>;

// ---------------------------------------------------------------------------
// Error taxonomy
// ---------------------------------------------------------------------------

// Bad configuration detected before any work starts.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: mismatched dimensions, stale caches, stepping a finished episode.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value produced at runtime. Carries the step (or layer) index at
// which the fault was detected. A reportable outcome, not a crash.
struct NumericFault : std::runtime_error {
  explicit NumericFault(const std::string& msg) : std::runtime_error(msg), index(-1) {}
  NumericFault(const std::string& msg, long where)
      : std::runtime_error(msg + " (at index " + std::to_string(where) + ")"),
        index(where) {}
  long index;
};

// Failure of an external environment process or its wire protocol.
struct EnvFault : std::runtime_error {
  explicit EnvFault(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double l1_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

inline double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double linf_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

inline double clip(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

// ---------------------------------------------------------------------------
// Deterministic random streams
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent substream seed from a base seed and a stream name,
// so that e.g. exploration and environment randomness never alias.
inline std::uint64_t seed_stream(std::uint64_t base, std::string_view tag) {
  return splitmix64(base ^ fnv1a(tag));
}

// Small counter-based generator (xorshift-star over splitmix state). All
// draws are made through explicit mappings, so sequences are identical on
// every platform for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

  std::uint64_t next() {
    state_ = splitmix64(state_);
    return state_;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  int below_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

// 17 significant digits: round-trips any double exactly.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace streamrl
