#pragma once

#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "streamrl/common.hpp"

// Brute-force ground truth used by tests and acceptance runs. Deliberately
// slow and self-contained: dense tables, full sweeps, no code shared with the
// incremental learners it is used to check.

namespace streamrl::oracle {

struct TabularMDP {
  int num_states = 0;
  int num_actions = 0;
  // transitions[s][a][s'], rewards[s][a]
  std::vector<std::vector<std::vector<double>>> transitions;
  std::vector<std::vector<double>> rewards;
  std::set<int> terminal_states;
  double discount = 0.99;

  void validate() const {
    if (num_states <= 0 || num_actions <= 0)
      throw ConfigError("TabularMDP: empty state or action set");
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_actions; ++a) {
        double total = 0.0;
        for (double p : transitions[s][a]) total += p;
        if (std::abs(total - 1.0) > 1e-12)
          throw ConfigError("TabularMDP: transition row does not sum to 1");
      }
  }
};

struct ValueIterationResult {
  std::vector<std::vector<double>> q;  // q[s][a]
  std::vector<int> policy;             // greedy, ties to lowest action index
  int sweeps = 0;
};

inline ValueIterationResult value_iteration(const TabularMDP& mdp, double tol,
                                            int max_sweeps = 1000000) {
  if (tol <= 0.0) throw ConfigError("value_iteration: tol must be positive");
  mdp.validate();
  std::vector<std::vector<double>> q(mdp.num_states,
                                     std::vector<double>(mdp.num_actions, 0.0));
  auto state_value = [&](const std::vector<std::vector<double>>& table, int s) {
    if (mdp.terminal_states.count(s)) return 0.0;
    double best = table[s][0];
    for (int a = 1; a < mdp.num_actions; ++a) best = std::max(best, table[s][a]);
    return best;
  };

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double residual = 0.0;
    auto next = q;
    for (int s = 0; s < mdp.num_states; ++s) {
      if (mdp.terminal_states.count(s)) continue;
      for (int a = 0; a < mdp.num_actions; ++a) {
        double backup = mdp.rewards[s][a];
        for (int s2 = 0; s2 < mdp.num_states; ++s2)
          backup += mdp.discount * mdp.transitions[s][a][s2] * state_value(q, s2);
        residual = std::max(residual, std::abs(backup - q[s][a]));
        next[s][a] = backup;
      }
    }
    q = std::move(next);
    if (residual < tol) break;
  }
  if (sweep == max_sweeps)
    throw ConfigError("value_iteration: no convergence (discount 1 without absorption?)");

  ValueIterationResult out;
  out.q = q;
  out.sweeps = sweep + 1;
  out.policy.resize(mdp.num_states, 0);
  for (int s = 0; s < mdp.num_states; ++s) {
    int best = 0;
    for (int a = 1; a < mdp.num_actions; ++a)
      if (q[s][a] > q[s][best]) best = a;
    out.policy[s] = best;
  }
  return out;
}

// Actions whose q-value is within `tol` of the state's best; the set an
// optimal greedy policy may pick from.
inline std::set<int> optimal_action_set(const ValueIterationResult& vi, int state,
                                        double tol = 1e-9) {
  double best = vi.q[state][0];
  for (double v : vi.q[state]) best = std::max(best, v);
  std::set<int> actions;
  for (std::size_t a = 0; a < vi.q[state].size(); ++a)
    if (vi.q[state][a] >= best - tol) actions.insert(static_cast<int>(a));
  return actions;
}

// ---------------------------------------------------------------------------
// Forward-view returns over recorded episodes
// ---------------------------------------------------------------------------

// states[0..T], rewards[1..T] stored as rewards[k] = R_{k+1}. The final state
// is the episode's end; its value is never bootstrapped.
struct Trajectory {
  std::vector<std::vector<double>> states;
  std::vector<double> rewards;

  int length() const { return static_cast<int>(rewards.size()); }
};

using ValueFn = std::function<double(const std::vector<double>&)>;

inline double discounted_return(const std::vector<double>& rewards, double discount) {
  double g = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) g = rewards[k] + discount * g;
  return g;
}

// G_{t:t+n} = sum_{k<n} gamma^k R_{t+k+1} + gamma^n v(S_{t+n}); collapses to
// the Monte-Carlo return when t+n reaches the episode end.
inline double n_step_return(const Trajectory& traj, int t, int n, const ValueFn& value,
                            double discount) {
  const int T = traj.length();
  if (t < 0 || t >= T || n < 1) throw UsageError("n_step_return: bad indices");
  double g = 0.0, scale = 1.0;
  const int last = std::min(t + n, T);
  for (int k = t; k < last; ++k) {
    g += scale * traj.rewards[k];
    scale *= discount;
  }
  if (t + n < T) g += scale * value(traj.states[t + n]);
  return g;
}

// G_t^lambda = (1-lambda) * sum_{n=1}^{T-t-1} lambda^{n-1} G_{t:t+n}
//              + lambda^{T-t-1} * G_t
inline double lambda_return(const Trajectory& traj, int t, double lambda,
                            const ValueFn& value, double discount) {
  const int T = traj.length();
  if (t < 0 || t >= T) throw UsageError("lambda_return: bad index");
  double g = 0.0, weight = 1.0 - lambda;
  for (int n = 1; n <= T - t - 1; ++n) {
    g += weight * std::pow(lambda, n - 1) * n_step_return(traj, t, n, value, discount);
  }
  g += std::pow(lambda, T - t - 1) * n_step_return(traj, t, T - t, value, discount);
  return g;
}

}  // namespace streamrl::oracle
