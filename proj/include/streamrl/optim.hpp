#pragma once

#include <cmath>
#include <vector>

#include "streamrl/common.hpp"

namespace streamrl {

// Exponential moving averages of the objective gradient and its square,
// stepped once per transition.
struct AdamState {
  ParamVector m;
  ParamVector v;
  long step_count = 0;
  double beta0 = 0.999;  // first-moment decay
  double beta1 = 0.999;  // second-moment decay
  double epsilon = 0.01;
  bool bias_correction = false;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Eligibility trace with decay gamma*lambda. The second-moment estimate is
// tracked only for the adaptive rule; it is never reset with the trace.
struct TraceState {
  ParamVector z;
  ParamVector v;
  double decay = 0.0;  // gamma * lambda
  bool track_second_moment = false;

  TraceState() = default;
  TraceState(std::size_t n, double gamma_lambda, bool with_second_moment = false)
      : z(n, 0.0),
        v(with_second_moment ? n : 0, 0.0),
        decay(gamma_lambda),
        track_second_moment(with_second_moment) {}
};

namespace detail {
inline void require_aligned(const ParamVector& a, const ParamVector& b, const char* who) {
  if (a.size() != b.size()) throw UsageError(std::string(who) + ": misaligned vectors");
}
inline void require_finite(const ParamVector& g, const char* who) {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!std::isfinite(g[i]))
      throw NumericFault(std::string(who) + ": non-finite gradient", static_cast<long>(i));
}
}  // namespace detail

// m <- b0*m + (1-b0)*g;  v <- b1*v + (1-b1)*g^2;  w <- w - eta * m/(sqrt(v)+eps)
// (moments bias-corrected first when enabled). Throws before mutating anything
// if the gradient is non-finite.
inline void adam_step(AdamState& state, ParamVector& weights, const ParamVector& grad,
                      double eta) {
  detail::require_aligned(state.m, weights, "adam_step");
  detail::require_aligned(weights, grad, "adam_step");
  if (eta < 0.0) throw ConfigError("adam_step: eta must be non-negative");
  detail::require_finite(grad, "adam_step");

  ++state.step_count;
  const double mc = state.bias_correction
                        ? 1.0 - std::pow(state.beta0, static_cast<double>(state.step_count))
                        : 1.0;
  const double vc = state.bias_correction
                        ? 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count))
                        : 1.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    state.m[i] = state.beta0 * state.m[i] + (1.0 - state.beta0) * grad[i];
    state.v[i] = state.beta1 * state.v[i] + (1.0 - state.beta1) * grad[i] * grad[i];
    const double rho = (state.m[i] / mc) / (std::sqrt(state.v[i] / vc) + state.epsilon);
    weights[i] -= eta * rho;
  }
}

// z <- decay*z + g, plus the second-moment EMA when tracked:
// v <- decay*v + (1-decay)*g^2.
inline void trace_accumulate(TraceState& state, const ParamVector& grad_q) {
  detail::require_aligned(state.z, grad_q, "trace_accumulate");
  detail::require_finite(grad_q, "trace_accumulate");
  for (std::size_t i = 0; i < state.z.size(); ++i)
    state.z[i] = state.decay * state.z[i] + grad_q[i];
  if (state.track_second_moment)
    for (std::size_t i = 0; i < state.v.size(); ++i)
      state.v[i] = state.decay * state.v[i] + (1.0 - state.decay) * grad_q[i] * grad_q[i];
}

// w <- w + eta * delta * z
inline void q_lambda_step(const TraceState& state, ParamVector& weights, double delta,
                          double eta) {
  detail::require_aligned(state.z, weights, "q_lambda_step");
  for (std::size_t i = 0; i < weights.size(); ++i)
    weights[i] += eta * delta * state.z[i];
}

// rho = z/(sqrt(v)+eps);  w <- w + eta * clip(delta, -1, 1) * rho
inline void aq_lambda_step(const TraceState& state, ParamVector& weights, double delta,
                           double eta, double epsilon) {
  if (epsilon <= 0.0) throw ConfigError("aq_lambda_step: epsilon must be positive");
  if (!state.track_second_moment)
    throw UsageError("aq_lambda_step: trace state lacks the second-moment estimate");
  detail::require_aligned(state.z, weights, "aq_lambda_step");
  const double clipped = clip(delta, -1.0, 1.0);
  for (std::size_t i = 0; i < weights.size(); ++i)
    weights[i] += eta * clipped * state.z[i] / (std::sqrt(state.v[i]) + epsilon);
}

// Overshoot-bounded trace update: the effective step size is capped so that
// eta_eff * kappa * max(|delta|, 1) * ||z||_1 never exceeds 1. Returns the
// effective step size actually applied.
inline double obgd_step(const TraceState& state, ParamVector& weights, double delta,
                        double eta, double kappa) {
  if (kappa <= 0.0) throw ConfigError("obgd_step: kappa must be positive");
  detail::require_aligned(state.z, weights, "obgd_step");
  const double delta_bar = std::max(std::abs(delta), 1.0);
  const double z1 = l1_norm(state.z);
  const double bound = kappa * delta_bar * z1;
  const double eta_eff = bound > 0.0 ? std::min(eta, 1.0 / bound) : eta;
  for (std::size_t i = 0; i < weights.size(); ++i)
    weights[i] += eta_eff * delta * state.z[i];
  return eta_eff;
}

// z <- 0; the second-moment estimate survives unless explicitly asked for.
inline void reset_trace(TraceState& state, bool reset_v = false) {
  std::fill(state.z.begin(), state.z.end(), 0.0);
  if (reset_v) std::fill(state.v.begin(), state.v.end(), 0.0);
}

// Heavy-ball baseline: m <- mu*m + g;  w <- w - eta*m.
inline void sgdm_step(ParamVector& momentum, ParamVector& weights, const ParamVector& grad,
                      double eta, double mu) {
  detail::require_aligned(momentum, weights, "sgdm_step");
  detail::require_aligned(weights, grad, "sgdm_step");
  detail::require_finite(grad, "sgdm_step");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    momentum[i] = mu * momentum[i] + grad[i];
    weights[i] -= eta * momentum[i];
  }
}

}  // namespace streamrl
