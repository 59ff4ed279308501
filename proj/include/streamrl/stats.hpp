#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "streamrl/common.hpp"

namespace streamrl {

struct RunRecord {
  std::string env_name;
  std::uint64_t seed = 0;
  std::vector<std::pair<long, double>> series;  // (step, eval_return), steps increasing

  void validate() const {
    for (std::size_t i = 1; i < series.size(); ++i)
      if (series[i].first <= series[i - 1].first)
        throw UsageError("RunRecord: steps must be strictly increasing");
  }
};

struct Baseline {
  double random_score = 0.0;
  double reference_score = 1.0;
};

// Normalized scores per environment; each inner vector holds one entry per run.
struct ScoreMatrix {
  std::map<std::string, std::vector<double>> scores;

  std::vector<double> pooled() const {
    std::vector<double> all;
    for (const auto& [env, xs] : scores) all.insert(all.end(), xs.begin(), xs.end());
    return all;
  }
};

inline ScoreMatrix normalize_scores(const std::map<std::string, std::vector<double>>& raw,
                                    const std::map<std::string, Baseline>& baselines) {
  ScoreMatrix out;
  for (const auto& [env, xs] : raw) {
    const auto it = baselines.find(env);
    if (it == baselines.end())
      throw ConfigError("normalize_scores: no baseline for env '" + env + "'");
    const Baseline& b = it->second;
    if (b.reference_score == b.random_score)
      throw ConfigError("normalize_scores: degenerate baseline for env '" + env + "'");
    auto& dst = out.scores[env];
    dst.reserve(xs.size());
    for (double x : xs)
      dst.push_back((x - b.random_score) / (b.reference_score - b.random_score));
  }
  return out;
}

// Mean of the middle half: floor(0.25*n) samples trimmed from each end.
inline double iqm(std::vector<double> samples) {
  if (samples.empty()) throw UsageError("iqm: empty sample set");
  std::sort(samples.begin(), samples.end());
  const std::size_t cut = samples.size() / 4;
  double total = 0.0;
  for (std::size_t i = cut; i < samples.size() - cut; ++i) total += samples[i];
  return total / static_cast<double>(samples.size() - 2 * cut);
}

namespace detail {
// Percentile without interpolation: the smallest sample with cumulative
// probability >= q. Keeps bootstrap intervals exactly on resample atoms so
// enumeration oracles can match them bit for bit.
inline double quantile_at(std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  const double pos = std::ceil(q * static_cast<double>(n)) - 1.0;
  const std::size_t idx =
      pos < 0.0 ? 0 : std::min(n - 1, static_cast<std::size_t>(pos));
  return sorted[idx];
}
}  // namespace detail

using PooledStatistic = std::function<double(const std::vector<double>&)>;

struct BootstrapResult {
  double low = 0.0;
  double high = 0.0;
  bool low_resample_warning = false;  // resamples < 100
};

// Resamples runs with replacement independently inside each env stratum and
// takes the percentile interval of the recomputed pooled statistic.
inline BootstrapResult stratified_bootstrap_ci(const ScoreMatrix& matrix,
                                               const PooledStatistic& statistic,
                                               int resamples, double level, Rng& rng) {
  if (resamples < 1) throw ConfigError("stratified_bootstrap_ci: resamples must be >= 1");
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("stratified_bootstrap_ci: level must lie in (0, 1)");
  if (matrix.scores.empty()) throw UsageError("stratified_bootstrap_ci: empty matrix");

  std::vector<double> stats(resamples);
  std::vector<double> pooled;
  for (int r = 0; r < resamples; ++r) {
    pooled.clear();
    for (const auto& [env, xs] : matrix.scores) {
      if (xs.empty()) throw UsageError("stratified_bootstrap_ci: empty stratum " + env);
      for (std::size_t i = 0; i < xs.size(); ++i)
        pooled.push_back(xs[rng.below(xs.size())]);
    }
    stats[r] = statistic(pooled);
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = (1.0 - level) / 2.0;
  BootstrapResult out;
  out.low = detail::quantile_at(stats, alpha);
  out.high = detail::quantile_at(stats, 1.0 - alpha);
  out.low_resample_warning = resamples < 100;
  return out;
}

// Mann-Whitney style: P(X > Y) + 0.5 P(X = Y) over run pairs, averaged over
// the environments both sides share. Computed as 0.5 plus an odd deviation
// snapped to a 2^-50 grid, so poi(x,y) + poi(y,x) == 1.0 holds bit-exactly
// (the snap perturbs the value by at most 2^-51, far below the statistic's
// own granularity).
inline double probability_of_improvement(const ScoreMatrix& x, const ScoreMatrix& y) {
  double deviation_sum = 0.0;
  int envs = 0;
  for (const auto& [env, xs] : x.scores) {
    const auto it = y.scores.find(env);
    if (it == y.scores.end()) continue;
    const auto& ys = it->second;
    if (xs.empty() || ys.empty()) continue;
    double wins2 = 0.0;  // doubled win count; stays integral, hence exact
    for (double a : xs)
      for (double b : ys) wins2 += a > b ? 2.0 : (a == b ? 1.0 : 0.0);
    const double pairs = static_cast<double>(xs.size()) * static_cast<double>(ys.size());
    deviation_sum += (wins2 - pairs) / (2.0 * pairs);
    ++envs;
  }
  if (envs == 0) throw UsageError("probability_of_improvement: no shared environments");
  const double scale = 1125899906842624.0;  // 2^50
  const double m = std::nearbyint((deviation_sum / envs) * scale) / scale;
  return 0.5 + m;
}

}  // namespace streamrl
