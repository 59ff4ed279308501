#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "streamrl/common.hpp"

namespace streamrl {

// A loss value together with its gradient w.r.t. the network outputs it was
// computed from. Targets are always treated as constants (semi-gradient).
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

inline LossGrad mse(double prediction, double target) {
  const double delta = target - prediction;
  return {delta * delta, {-2.0 * delta}};
}

// 0.5*d^2/kappa inside the |d| < kappa window, |d| - 0.5*kappa outside.
// The gradient w.r.t. the prediction is -d/kappa inside and -sign(d)
// outside, so its magnitude never exceeds 1.
inline LossGrad smooth_l1(double prediction, double target, double kappa = 1.0) {
  if (kappa <= 0.0) throw ConfigError("smooth_l1: kappa must be positive");
  const double delta = target - prediction;
  if (std::abs(delta) < kappa)
    return {0.5 * delta * delta / kappa, {-delta / kappa}};
  return {std::abs(delta) - 0.5 * kappa, {delta > 0.0 ? -1.0 : 1.0}};
}

inline double td_error_control(double q_now, double q_next_max, double reward,
                               double discount, bool terminal) {
  return reward + (terminal ? 0.0 : discount * q_next_max) - q_now;
}

// ---------------------------------------------------------------------------
// Categorical (C51) machinery
// ---------------------------------------------------------------------------

// Fixed uniformly spaced atom grid with per-atom probability mass.
struct CategoricalDistribution {
  std::vector<double> atoms;
  std::vector<double> probs;

  double spacing() const {
    return (atoms.back() - atoms.front()) / static_cast<double>(atoms.size() - 1);
  }
  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) m += atoms[i] * probs[i];
    return m;
  }
};

inline std::vector<double> uniform_atom_grid(double v_min, double v_max, int count) {
  if (count < 2 || !(v_max > v_min))
    throw ConfigError("atom grid needs v_max > v_min and at least two atoms");
  std::vector<double> atoms(count);
  const double dz = (v_max - v_min) / (count - 1);
  for (int i = 0; i < count; ++i) atoms[i] = v_min + dz * i;
  atoms.back() = v_max;
  return atoms;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  const double hi = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - hi));
  for (double& x : p) x /= z;
  return p;
}

// Applies the sample Bellman map z -> clip(r + discount*z, v_min, v_max) to
// every atom of the source and splits each atom's mass linearly between the
// two bracketing atoms of the same grid (all mass to one atom when the image
// lands exactly on it).
inline CategoricalDistribution c51_project(const CategoricalDistribution& target_source,
                                           double reward, double discount,
                                           bool terminal) {
  const auto& atoms = target_source.atoms;
  if (atoms.size() < 2 || atoms.size() != target_source.probs.size())
    throw UsageError("c51_project: malformed source distribution");
  const int k = static_cast<int>(atoms.size());
  const double v_min = atoms.front(), v_max = atoms.back();
  const double dz = target_source.spacing();

  CategoricalDistribution out;
  out.atoms = atoms;
  out.probs.assign(k, 0.0);
  for (int j = 0; j < k; ++j) {
    const double mass = target_source.probs[j];
    if (mass == 0.0) continue;
    const double tz = clip(reward + (terminal ? 0.0 : discount * atoms[j]), v_min, v_max);
    // rounding in dz can push the quotient a hair past the last index
    const double b = clip((tz - v_min) / dz, 0.0, static_cast<double>(k - 1));
    const int lo = static_cast<int>(std::floor(b));
    const int hi = static_cast<int>(std::ceil(b));
    if (lo == hi) {
      out.probs[lo] += mass;
    } else {
      out.probs[lo] += mass * (hi - b);
      out.probs[hi] += mass * (b - lo);
    }
  }
  return out;
}

// Cross entropy of the projected target against softmax(logits); the gradient
// w.r.t. the logits is softmax(logits) - m, so every component lies in [-1, 1].
inline LossGrad c51_cross_entropy(const std::vector<double>& logits,
                                  const CategoricalDistribution& projected_target) {
  if (logits.size() != projected_target.probs.size())
    throw UsageError("c51_cross_entropy: logits/target size mismatch");
  const double hi = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - hi);
  const double log_z = std::log(z) + hi;

  LossGrad out;
  out.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double log_p = logits[i] - log_z;
    const double m = projected_target.probs[i];
    if (m > 0.0) out.loss -= m * log_p;
    out.grad[i] = std::exp(log_p) - m;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quantile Huber (QR)
// ---------------------------------------------------------------------------

namespace detail {
inline double huber(double u, double kappa) {
  return std::abs(u) <= kappa ? 0.5 * u * u : kappa * (std::abs(u) - 0.5 * kappa);
}
inline double huber_grad(double u, double kappa) {
  return std::abs(u) <= kappa ? u : kappa * (u > 0.0 ? 1.0 : -1.0);
}
}  // namespace detail

// Pairs every quantile estimate (midpoint levels tau_i = (2i-1)/2N) with
// every target sample, averaging the asymmetric Huber penalty over targets
// and summing over quantiles. Each gradient component is bounded by
// max(tau, 1-tau) <= 1 for kappa = 1.
inline LossGrad quantile_huber(const std::vector<double>& quantile_estimates,
                               const std::vector<double>& target_samples,
                               double kappa = 1.0) {
  if (kappa <= 0.0) throw ConfigError("quantile_huber: kappa must be positive");
  if (quantile_estimates.empty() || target_samples.empty())
    throw UsageError("quantile_huber: empty inputs");
  const std::size_t n = quantile_estimates.size();
  const std::size_t m = target_samples.size();

  LossGrad out;
  out.grad.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = (2.0 * i + 1.0) / (2.0 * n);
    for (double t : target_samples) {
      const double u = t - quantile_estimates[i];
      const double w = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
      out.loss += w * detail::huber(u, kappa) / kappa;
      out.grad[i] -= w * detail::huber_grad(u, kappa) / kappa;
    }
  }
  out.loss /= static_cast<double>(m);
  for (double& g : out.grad) g /= static_cast<double>(m);
  return out;
}

}  // namespace streamrl
