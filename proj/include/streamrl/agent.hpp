#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "streamrl/common.hpp"
#include "streamrl/env.hpp"
#include "streamrl/net.hpp"
#include "streamrl/objectives.hpp"
#include "streamrl/optim.hpp"

namespace streamrl {

enum class Algorithm { Dqn, C51, StreamQ, AqLambda };
enum class Objective { Mse, SmoothL1, Categorical, Quantile };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Dqn: return "dqn";
    case Algorithm::C51: return "c51";
    case Algorithm::StreamQ: return "streamq";
    case Algorithm::AqLambda: return "aqlambda";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "dqn") return Algorithm::Dqn;
  if (s == "c51") return Algorithm::C51;
  if (s == "streamq") return Algorithm::StreamQ;
  if (s == "aqlambda") return Algorithm::AqLambda;
  throw ConfigError("unknown algorithm '" + s + "' (dqn|c51|streamq|aqlambda)");
}

inline std::string to_string(Objective o) {
  switch (o) {
    case Objective::Mse: return "mse";
    case Objective::SmoothL1: return "smooth_l1";
    case Objective::Categorical: return "categorical";
    case Objective::Quantile: return "quantile";
  }
  return "?";
}

inline Objective objective_from_string(const std::string& s) {
  if (s == "mse") return Objective::Mse;
  if (s == "smooth_l1") return Objective::SmoothL1;
  if (s == "categorical") return Objective::Categorical;
  if (s == "quantile") return Objective::Quantile;
  throw ConfigError("unknown objective '" + s + "' (mse|smooth_l1|categorical|quantile)");
}

// One agent-environment interaction. `reward` is the training signal (after
// any normalization); `terminal` covers truncation too, with `truncated`
// distinguishing it so the TD target can still bootstrap. `greedy` records
// which branch of epsilon-greedy produced the action.
struct Transition {
  std::vector<double> obs;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminal = false;
  bool truncated = false;
  bool greedy = true;
};

struct ExplorationSchedule {
  double eps_start = 1.0;
  double eps_end = 0.01;
  long decay_steps = 2'500'000;

  void validate() const {
    if (!(0.0 <= eps_end && eps_end <= eps_start && eps_start <= 1.0))
      throw ConfigError("ExplorationSchedule: need 0 <= eps_end <= eps_start <= 1");
    if (decay_steps <= 0) throw ConfigError("ExplorationSchedule: decay_steps must be positive");
  }

  double epsilon(long step) const {
    if (step >= decay_steps) return eps_end;
    const double f = static_cast<double>(step) / static_cast<double>(decay_steps);
    return eps_start + (eps_end - eps_start) * f;
  }
};

struct AgentConfig {
  Algorithm algorithm = Algorithm::Dqn;
  Objective objective = Objective::SmoothL1;
  double discount = 0.99;
  double eta = 2.2e-6;
  double beta0 = 0.999;
  double beta1 = 0.999;
  double optim_epsilon = 0.01;  // Adam epsilon, or the AQ(lambda) denominator guard
  bool bias_correction = false;
  double huber_kappa = 1.0;  // SmoothL1 / quantile Huber threshold
  double obgd_kappa = 2.0;
  double lambda = 0.8;
  double v_min = -10.0;
  double v_max = 10.0;
  NetworkSpec net;
  ExplorationSchedule schedule;
  std::uint64_t seed = 0;

  void validate() const {
    net.validate();
    schedule.validate();
    if (!(discount >= 0.0 && discount <= 1.0)) throw ConfigError("AgentConfig: discount in [0,1]");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("AgentConfig: lambda in [0,1]");
    if (eta <= 0.0) throw ConfigError("AgentConfig: eta must be positive");
    if (optim_epsilon <= 0.0) throw ConfigError("AgentConfig: optim_epsilon must be positive");
    const bool distributional =
        objective == Objective::Categorical || objective == Objective::Quantile;
    if ((algorithm == Algorithm::C51) != (objective == Objective::Categorical))
      throw ConfigError("AgentConfig: c51 and the categorical objective require each other");
    if (objective == Objective::Quantile && algorithm != Algorithm::Dqn)
      throw ConfigError("AgentConfig: the quantile objective runs on the dqn agent");
    if ((algorithm == Algorithm::StreamQ || algorithm == Algorithm::AqLambda) && distributional)
      throw ConfigError("AgentConfig: trace agents use a scalar head");
    if (distributional && net.atoms_per_action < 2)
      throw ConfigError("AgentConfig: distributional head needs atoms_per_action >= 2");
    if (!distributional && net.atoms_per_action != 1)
      throw ConfigError("AgentConfig: scalar head needs atoms_per_action == 1");
    if (objective == Objective::Categorical && !(v_max > v_min))
      throw ConfigError("AgentConfig: categorical head needs v_max > v_min");
  }
};

// Table 2 per-algorithm defaults on a small MLP body.
inline AgentConfig default_agent_config(Algorithm alg, int input_dim, int actions,
                                        std::vector<int> hidden = {32}) {
  AgentConfig cfg;
  cfg.algorithm = alg;
  switch (alg) {
    case Algorithm::Dqn:
      cfg.objective = Objective::SmoothL1;
      cfg.eta = 2.2e-6;
      cfg.optim_epsilon = 0.01;
      break;
    case Algorithm::C51:
      cfg.objective = Objective::Categorical;
      cfg.eta = 4.6e-5;
      cfg.optim_epsilon = 0.01;
      break;
    case Algorithm::StreamQ:
      cfg.objective = Objective::SmoothL1;
      cfg.eta = 1.0;
      break;
    case Algorithm::AqLambda:
      cfg.objective = Objective::SmoothL1;
      cfg.eta = 4.6e-4;
      cfg.optim_epsilon = 0.1;
      break;
  }
  const int atoms = cfg.objective == Objective::Categorical ? 200 : 1;
  cfg.net = make_mlp_spec(input_dim, std::move(hidden), actions, atoms);
  return cfg;
}

struct StepReport {
  double delta = 0.0;
  double update_norm = 0.0;  // l2 norm of the applied parameter change
  double loss = 0.0;
};

namespace detail {
inline int argmax_lowest(const std::vector<double>& xs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(xs.size()); ++i)
    if (xs[i] > xs[best]) best = i;
  return best;
}
}  // namespace detail

class Agent {
 public:
  explicit Agent(AgentConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    params_ = init_sparse(cfg_.net, cfg_.seed);
    if (uses_adam())
      adam_ = AdamState(params_.size());
    adam_.beta0 = cfg_.beta0;
    adam_.beta1 = cfg_.beta1;
    adam_.epsilon = cfg_.optim_epsilon;
    adam_.bias_correction = cfg_.bias_correction;
    if (uses_trace())
      trace_ = TraceState(params_.size(), cfg_.discount * cfg_.lambda,
                          cfg_.algorithm == Algorithm::AqLambda);
    if (cfg_.objective == Objective::Categorical)
      atoms_ = uniform_atom_grid(cfg_.v_min, cfg_.v_max, cfg_.net.atoms_per_action);
    // size every scratch buffer up front so the footprint never moves
    prev_params_ = params_;
    const std::vector<double> probe(cfg_.net.input_dim, 0.0);
    for (auto* c : {&cache_, &next_cache_, &scratch_cache_})
      forward(cfg_.net, params_, probe, *c);
  }

  const AgentConfig& config() const { return cfg_; }
  const ParamVector& params() const { return params_; }
  ParamVector& mutable_params() { return params_; }
  const TraceState& trace() const { return trace_; }

  // Collapses the network head into one action value per action.
  std::vector<double> q_values(const std::vector<double>& obs) {
    const auto out = forward(cfg_.net, params_, obs, scratch_cache_);
    return collapse(out);
  }

  int greedy_action(const std::vector<double>& obs) {
    return detail::argmax_lowest(q_values(obs));
  }

  // Epsilon-greedy on the schedule. The greedy flag reports which branch ran,
  // not whether the sampled action happened to coincide with the argmax.
  std::pair<int, bool> act(const std::vector<double>& obs, long global_step, Rng& rng) {
    const double eps = cfg_.schedule.epsilon(global_step);
    if (rng.uniform() < eps)
      return {rng.below_int(cfg_.net.actions), false};
    return {greedy_action(obs), true};
  }

  // One parameter update from exactly one transition.
  StepReport observe(const Transition& t) {
    if (t.action < 0 || t.action >= cfg_.net.actions)
      throw UsageError("observe: transition action out of range");
    prev_params_ = params_;
    StepReport rep;
    switch (cfg_.algorithm) {
      case Algorithm::Dqn:
        rep = cfg_.objective == Objective::Quantile ? observe_quantile(t) : observe_dqn(t);
        break;
      case Algorithm::C51: rep = observe_c51(t); break;
      case Algorithm::StreamQ:
      case Algorithm::AqLambda: rep = observe_trace(t); break;
    }
    double norm2 = 0.0;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const double d = params_[i] - prev_params_[i];
      norm2 += d * d;
    }
    rep.update_norm = std::sqrt(norm2);
    if (!all_finite(params_))
      throw NumericFault("observe: parameters left non-finite after update");
    return rep;
  }

  // Total doubles held by the agent; constant in stream length.
  std::size_t state_size() const {
    std::size_t n = params_.size() + prev_params_.size() + atoms_.size();
    n += adam_.m.size() + adam_.v.size();
    n += trace_.z.size() + trace_.v.size();
    for (const auto* c : {&cache_, &next_cache_, &scratch_cache_})
      for (const auto& layer : c->layers)
        n += layer.input.size() + layer.pre.size() + layer.xhat.size() +
             layer.act_in.size() + layer.out.size() + 1;
    return n;
  }

 private:
  bool uses_adam() const {
    return cfg_.algorithm == Algorithm::Dqn || cfg_.algorithm == Algorithm::C51;
  }
  bool uses_trace() const {
    return cfg_.algorithm == Algorithm::StreamQ || cfg_.algorithm == Algorithm::AqLambda;
  }

  std::vector<double> collapse(const std::vector<double>& out) const {
    const int a_count = cfg_.net.actions;
    const int k = cfg_.net.atoms_per_action;
    if (k == 1) return out;
    std::vector<double> q(a_count, 0.0);
    for (int a = 0; a < a_count; ++a) {
      if (cfg_.objective == Objective::Categorical) {
        std::vector<double> logits(out.begin() + a * k, out.begin() + (a + 1) * k);
        const auto p = softmax(logits);
        for (int i = 0; i < k; ++i) q[a] += p[i] * atoms_[i];
      } else {  // quantile head: value is the quantile mean
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += out[a * k + i];
        q[a] = s / k;
      }
    }
    return q;
  }

  StepReport observe_dqn(const Transition& t) {
    const bool bootstrap_stops = t.terminal && !t.truncated;
    const auto q_now = forward(cfg_.net, params_, t.obs, cache_);
    double q_next_max = 0.0;
    if (!bootstrap_stops) {
      const auto q_next = forward(cfg_.net, params_, t.next_obs, next_cache_);
      q_next_max = *std::max_element(q_next.begin(), q_next.end());
    }
    const double q_sa = q_now[t.action];
    const double delta =
        td_error_control(q_sa, q_next_max, t.reward, cfg_.discount, bootstrap_stops);
    const LossGrad lg = cfg_.objective == Objective::Mse
                            ? mse(q_sa, q_sa + delta)
                            : smooth_l1(q_sa, q_sa + delta, cfg_.huber_kappa);
    std::vector<double> output_grad(cfg_.net.output_dim(), 0.0);
    output_grad[t.action] = lg.grad[0];
    const ParamVector g = backward(cfg_.net, params_, cache_, output_grad);
    adam_step(adam_, params_, g, cfg_.eta);
    return {delta, 0.0, lg.loss};
  }

  StepReport observe_quantile(const Transition& t) {
    const bool bootstrap_stops = t.terminal && !t.truncated;
    const int k = cfg_.net.atoms_per_action;
    const auto out_now = forward(cfg_.net, params_, t.obs, cache_);
    std::vector<double> theta(out_now.begin() + t.action * k,
                              out_now.begin() + (t.action + 1) * k);
    std::vector<double> targets(k, t.reward);
    double q_next_star = 0.0;
    if (!bootstrap_stops) {
      const auto out_next = forward(cfg_.net, params_, t.next_obs, next_cache_);
      const auto q_next = collapse(out_next);
      const int a_star = detail::argmax_lowest(q_next);
      q_next_star = q_next[a_star];
      for (int j = 0; j < k; ++j)
        targets[j] = t.reward + cfg_.discount * out_next[a_star * k + j];
    }
    const LossGrad lg = quantile_huber(theta, targets, cfg_.huber_kappa);
    std::vector<double> output_grad(cfg_.net.output_dim(), 0.0);
    for (int j = 0; j < k; ++j) output_grad[t.action * k + j] = lg.grad[j];
    const ParamVector g = backward(cfg_.net, params_, cache_, output_grad);
    adam_step(adam_, params_, g, cfg_.eta);
    double q_sa = 0.0;
    for (double v : theta) q_sa += v;
    q_sa /= k;
    const double delta =
        td_error_control(q_sa, q_next_star, t.reward, cfg_.discount, bootstrap_stops);
    return {delta, 0.0, lg.loss};
  }

  StepReport observe_c51(const Transition& t) {
    const bool bootstrap_stops = t.terminal && !t.truncated;
    const int k = cfg_.net.atoms_per_action;
    const auto out_now = forward(cfg_.net, params_, t.obs, cache_);

    CategoricalDistribution source;
    source.atoms = atoms_;
    double q_next_star = 0.0;
    if (bootstrap_stops) {
      // every atom projects onto the reward; the source masses are irrelevant
      source.probs.assign(k, 0.0);
      source.probs[0] = 1.0;
    } else {
      const auto out_next = forward(cfg_.net, params_, t.next_obs, next_cache_);
      const auto q_next = collapse(out_next);
      const int a_star = detail::argmax_lowest(q_next);
      q_next_star = q_next[a_star];
      std::vector<double> logits(out_next.begin() + a_star * k,
                                 out_next.begin() + (a_star + 1) * k);
      source.probs = softmax(logits);
    }
    const CategoricalDistribution target =
        c51_project(source, t.reward, cfg_.discount, bootstrap_stops);

    std::vector<double> logits_now(out_now.begin() + t.action * k,
                                   out_now.begin() + (t.action + 1) * k);
    const LossGrad lg = c51_cross_entropy(logits_now, target);
    std::vector<double> output_grad(cfg_.net.output_dim(), 0.0);
    for (int j = 0; j < k; ++j) output_grad[t.action * k + j] = lg.grad[j];
    const ParamVector g = backward(cfg_.net, params_, cache_, output_grad);
    adam_step(adam_, params_, g, cfg_.eta);

    const auto p_now = softmax(logits_now);
    double q_sa = 0.0;
    for (int i = 0; i < k; ++i) q_sa += p_now[i] * atoms_[i];
    const double delta =
        td_error_control(q_sa, q_next_star, t.reward, cfg_.discount, bootstrap_stops);
    return {delta, 0.0, lg.loss};
  }

  // StreamQ (ObGD) and AQ(lambda): delta first, then the q-gradient, the
  // trace, the weight update, and last the reset rule.
  StepReport observe_trace(const Transition& t) {
    const bool bootstrap_stops = t.terminal && !t.truncated;
    const auto q_now = forward(cfg_.net, params_, t.obs, cache_);
    double q_next_max = 0.0;
    if (!bootstrap_stops) {
      const auto q_next = forward(cfg_.net, params_, t.next_obs, next_cache_);
      q_next_max = *std::max_element(q_next.begin(), q_next.end());
    }
    const double delta = td_error_control(q_now[t.action], q_next_max, t.reward,
                                          cfg_.discount, bootstrap_stops);
    std::vector<double> output_grad(cfg_.net.output_dim(), 0.0);
    output_grad[t.action] = 1.0;
    const ParamVector grad_q = backward(cfg_.net, params_, cache_, output_grad);
    trace_accumulate(trace_, grad_q);
    if (cfg_.algorithm == Algorithm::StreamQ)
      obgd_step(trace_, params_, delta, cfg_.eta, cfg_.obgd_kappa);
    else
      aq_lambda_step(trace_, params_, delta, cfg_.eta, cfg_.optim_epsilon);
    if (t.terminal || !t.greedy) reset_trace(trace_);
    return {delta, 0.0, 0.5 * delta * delta};
  }

  AgentConfig cfg_;
  ParamVector params_;
  ParamVector prev_params_;
  AdamState adam_{0};
  TraceState trace_;
  std::vector<double> atoms_;
  ForwardCache cache_, next_cache_, scratch_cache_;
};

struct EpisodeResult {
  double raw_return = 0.0;  // undiscounted, pre-normalization rewards
  long steps = 0;
  std::vector<StepReport> reports;
};

struct EpisodeOptions {
  bool learn = true;
  std::optional<double> epsilon_override;  // evaluation runs at eps_end
  long* global_step = nullptr;             // drives the schedule when learning
};

inline EpisodeResult run_episode(Agent& agent, Env& env, Rng& rng, long step_budget,
                                 const EpisodeOptions& opts = {}) {
  EpisodeResult result;
  if (step_budget <= 0) return result;
  std::vector<double> obs = env.reset();
  long local_step = 0;
  for (; local_step < step_budget; ++local_step) {
    const long sched_step = opts.global_step ? *opts.global_step : local_step;
    int action;
    bool greedy;
    if (opts.epsilon_override) {
      if (rng.uniform() < *opts.epsilon_override) {
        action = rng.below_int(agent.config().net.actions);
        greedy = false;
      } else {
        action = agent.greedy_action(obs);
        greedy = true;
      }
    } else {
      std::tie(action, greedy) = agent.act(obs, sched_step, rng);
    }
    const StepResult sr = env.step(action);
    result.raw_return += sr.raw_reward;
    if (opts.learn) {
      Transition t{obs, action, sr.reward, sr.obs, sr.terminal, sr.truncated, greedy};
      result.reports.push_back(agent.observe(t));
      if (opts.global_step) ++*opts.global_step;
    }
    obs = sr.obs;
    if (sr.terminal) {
      ++local_step;
      break;
    }
  }
  result.steps = local_step;
  return result;
}

}  // namespace streamrl
