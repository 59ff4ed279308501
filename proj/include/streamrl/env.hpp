#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "streamrl/common.hpp"
#include "streamrl/oracle.hpp"

namespace streamrl {

struct EnvSpec {
  std::string name;
  int observation_dim = 0;
  int action_count = 0;
  int max_episode_steps = 0;  // 0 means unbounded
  std::pair<double, double> reward_range{-1.0, 1.0};
};

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  bool terminal = false;    // episode over (naturally or by truncation)
  bool truncated = false;   // ended by a time limit, not by the MDP
  double raw_reward = 0.0;  // pre-normalization reward, for evaluation
};

class Env {
 public:
  virtual ~Env() = default;
  virtual EnvSpec spec() const = 0;
  // Starts a fresh episode. A seed reseeds the environment's stream;  without
  // one the existing stream continues, so (seed, action sequence) determines
  // every trajectory.
  virtual std::vector<double> reset(std::optional<std::uint64_t> seed = std::nullopt) = 0;
  virtual StepResult step(int action) = 0;
};

namespace detail {
inline void check_action(int action, const EnvSpec& spec) {
  if (action < 0 || action >= spec.action_count)
    throw UsageError("env_step: action " + std::to_string(action) + " out of range for " +
                     spec.name);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Streaming statistics
// ---------------------------------------------------------------------------

// Welford accumulator over vectors; variance is the sample variance
// m2/(count-1).
struct RunningMoments {
  long count = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  explicit RunningMoments(std::size_t dim = 0) : mean(dim, 0.0), m2(dim, 0.0) {}

  void push(const std::vector<double>& x) {
    if (mean.empty()) {
      mean.assign(x.size(), 0.0);
      m2.assign(x.size(), 0.0);
    }
    if (x.size() != mean.size()) throw UsageError("RunningMoments: dimension changed");
    ++count;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean[i];
      mean[i] += d / static_cast<double>(count);
      m2[i] += d * (x[i] - mean[i]);
    }
  }

  double variance(std::size_t i) const {
    return count > 1 ? m2[i] / static_cast<double>(count - 1) : 0.0;
  }
};

// Updates the stats with obs, then returns (obs - mean)/sqrt(var + 1e-8).
// Until two samples exist the observation passes through unchanged.
inline std::vector<double> normalize_observation(RunningMoments& stats,
                                                 const std::vector<double>& obs) {
  stats.push(obs);
  if (stats.count < 2) return obs;
  std::vector<double> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i)
    out[i] = (obs[i] - stats.mean[i]) / std::sqrt(stats.variance(i) + 1e-8);
  return out;
}

// Normalization with the current statistics, without updating them.
inline std::vector<double> normalize_observation_frozen(const RunningMoments& stats,
                                                        const std::vector<double>& obs) {
  if (stats.count < 2) return obs;
  std::vector<double> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i)
    out[i] = (obs[i] - stats.mean[i]) / std::sqrt(stats.variance(i) + 1e-8);
  return out;
}

// Scales rewards by the running standard deviation of the discounted reward
// trace u <- (terminal ? 0 : discount*u) + reward.
struct RewardScaler {
  double u = 0.0;
  RunningMoments moments{1};
  double discount = 0.99;

  explicit RewardScaler(double gamma = 0.99) : discount(gamma) {}

  double scale(double reward, bool terminal) {
    u = (terminal ? 0.0 : discount * u) + reward;
    moments.push({u});
    if (moments.count < 2) return reward;
    const double denom = std::max(std::sqrt(moments.variance(0) + 1e-8), 1e-4);
    return reward / denom;
  }
};

// ---------------------------------------------------------------------------
// Built-in desk-scale environments
// ---------------------------------------------------------------------------

// States 0..n-2 occupied, one-hot over n slots; moving right from the last
// occupied state pays 1 and terminates. Left at 0 stays put. The only reward
// sits n-1-s steps from state s, so credit assignment stretches with gamma.
class ChainMdp final : public Env {
 public:
  explicit ChainMdp(int n = 7) : n_(n) {
    if (n < 2) throw ConfigError("ChainMdp: need at least 2 states");
  }

  EnvSpec spec() const override {
    return {"chain", n_, 2, 0, {0.0, 1.0}};
  }

  std::vector<double> reset(std::optional<std::uint64_t> /*seed*/ = std::nullopt) override {
    state_ = 0;
    active_ = true;
    return observation(state_);
  }

  StepResult step(int action) override {
    if (!active_) throw UsageError("env_step: episode already finished (chain)");
    detail::check_action(action, spec());
    StepResult r;
    if (action == 1) {
      if (state_ == n_ - 2) {
        state_ = n_ - 1;
        r.reward = 1.0;
        r.terminal = true;
        active_ = false;
      } else {
        ++state_;
      }
    } else if (state_ > 0) {
      --state_;
    }
    r.raw_reward = r.reward;
    r.obs = observation(state_);
    return r;
  }

  std::vector<double> observation(int s) const {
    std::vector<double> obs(n_, 0.0);
    obs[s] = 1.0;
    return obs;
  }

  oracle::TabularMDP to_tabular(double discount) const {
    oracle::TabularMDP mdp;
    mdp.num_states = n_;
    mdp.num_actions = 2;
    mdp.discount = discount;
    mdp.transitions.assign(n_, std::vector<std::vector<double>>(
                                   2, std::vector<double>(n_, 0.0)));
    mdp.rewards.assign(n_, std::vector<double>(2, 0.0));
    for (int s = 0; s < n_ - 1; ++s) {
      mdp.transitions[s][0][std::max(0, s - 1)] = 1.0;
      mdp.transitions[s][1][s + 1] = 1.0;
      if (s == n_ - 2) mdp.rewards[s][1] = 1.0;
    }
    mdp.transitions[n_ - 1][0][n_ - 1] = 1.0;
    mdp.transitions[n_ - 1][1][n_ - 1] = 1.0;
    mdp.terminal_states.insert(n_ - 1);
    return mdp;
  }

 private:
  int n_;
  int state_ = 0;
  bool active_ = false;
};

// Rectangular grid, one-hot cell observation. Actions up/down/left/right;
// bumping a wall or the border leaves the position unchanged at reward 0.
// Reaching the goal pays 1, a pit pays -1; both end the episode.
class GridWorld final : public Env {
 public:
  GridWorld(int width = 5, int height = 5, std::vector<std::pair<int, int>> walls = {},
            std::vector<std::pair<int, int>> pits = {})
      : width_(width), height_(height) {
    if (width < 2 || height < 2) throw ConfigError("GridWorld: grid too small");
    goal_ = cell(width_ - 1, height_ - 1);
    for (auto [x, y] : walls) walls_.insert(cell(x, y));
    for (auto [x, y] : pits) pits_.insert(cell(x, y));
    if (walls_.count(0) || walls_.count(goal_))
      throw ConfigError("GridWorld: wall blocks start or goal");
  }

  EnvSpec spec() const override {
    return {"gridworld", width_ * height_, 4, 0, {-1.0, 1.0}};
  }

  std::vector<double> reset(std::optional<std::uint64_t> /*seed*/ = std::nullopt) override {
    pos_ = 0;
    active_ = true;
    return observation(pos_);
  }

  StepResult step(int action) override {
    if (!active_) throw UsageError("env_step: episode already finished (gridworld)");
    detail::check_action(action, spec());
    const int next = neighbor(pos_, action);
    StepResult r;
    pos_ = next;
    if (pos_ == goal_) {
      r.reward = 1.0;
      r.terminal = true;
      active_ = false;
    } else if (pits_.count(pos_)) {
      r.reward = -1.0;
      r.terminal = true;
      active_ = false;
    }
    r.raw_reward = r.reward;
    r.obs = observation(pos_);
    return r;
  }

  std::vector<double> observation(int s) const {
    std::vector<double> obs(width_ * height_, 0.0);
    obs[s] = 1.0;
    return obs;
  }

  oracle::TabularMDP to_tabular(double discount) const {
    oracle::TabularMDP mdp;
    const int n = width_ * height_;
    mdp.num_states = n;
    mdp.num_actions = 4;
    mdp.discount = discount;
    mdp.transitions.assign(n, std::vector<std::vector<double>>(
                                  4, std::vector<double>(n, 0.0)));
    mdp.rewards.assign(n, std::vector<double>(4, 0.0));
    for (int s = 0; s < n; ++s) {
      for (int a = 0; a < 4; ++a) {
        const int s2 = neighbor(s, a);
        mdp.transitions[s][a][s2] = 1.0;
        if (s2 == goal_ && s != goal_) mdp.rewards[s][a] = 1.0;
        if (pits_.count(s2) && s != s2) mdp.rewards[s][a] = -1.0;
      }
    }
    mdp.terminal_states.insert(goal_);
    for (int p : pits_) mdp.terminal_states.insert(p);
    return mdp;
  }

  bool is_wall(int s) const { return walls_.count(s) > 0; }
  int goal_state() const { return goal_; }

 private:
  int cell(int x, int y) const {
    if (x < 0 || x >= width_ || y < 0 || y >= height_)
      throw ConfigError("GridWorld: cell out of bounds");
    return y * width_ + x;
  }

  int neighbor(int s, int action) const {
    int x = s % width_, y = s / width_;
    switch (action) {
      case 0: y -= 1; break;  // up
      case 1: y += 1; break;  // down
      case 2: x -= 1; break;  // left
      case 3: x += 1; break;  // right
    }
    if (x < 0 || x >= width_ || y < 0 || y >= height_) return s;
    const int t = y * width_ + x;
    return walls_.count(t) ? s : t;
  }

  int width_, height_, goal_;
  std::set<int> walls_, pits_;
  int pos_ = 0;
  bool active_ = false;
};

// 10x5 board; the ball starts in a random top-row column and falls one row
// per step, the paddle sits on the bottom row and moves left/stay/right.
// +1 for catching the ball, -1 otherwise.
class CatchEnv final : public Env {
 public:
  static constexpr int kRows = 10;
  static constexpr int kCols = 5;

  explicit CatchEnv(std::uint64_t seed = 0) : rng_(seed_stream(seed, "catch")) {}

  EnvSpec spec() const override {
    return {"catch", kRows * kCols, 3, kRows, {-1.0, 1.0}};
  }

  std::vector<double> reset(std::optional<std::uint64_t> seed = std::nullopt) override {
    if (seed) rng_ = Rng(seed_stream(*seed, "catch"));
    ball_row_ = 0;
    ball_col_ = rng_.below_int(kCols);
    paddle_col_ = kCols / 2;
    active_ = true;
    return observation();
  }

  StepResult step(int action) override {
    if (!active_) throw UsageError("env_step: episode already finished (catch)");
    detail::check_action(action, spec());
    paddle_col_ = clip_col(paddle_col_ + (action - 1));
    ++ball_row_;
    StepResult r;
    if (ball_row_ == kRows - 1) {
      r.reward = ball_col_ == paddle_col_ ? 1.0 : -1.0;
      r.terminal = true;
      active_ = false;
    }
    r.raw_reward = r.reward;
    r.obs = observation();
    return r;
  }

 private:
  static int clip_col(int c) { return c < 0 ? 0 : (c >= kCols ? kCols - 1 : c); }

  std::vector<double> observation() const {
    std::vector<double> obs(kRows * kCols, 0.0);
    obs[ball_row_ * kCols + ball_col_] = 1.0;
    obs[(kRows - 1) * kCols + paddle_col_] = 1.0;
    return obs;
  }

  Rng rng_;
  int ball_row_ = 0, ball_col_ = 0, paddle_col_ = 0;
  bool active_ = false;
};

// Dense random transition kernel and uniform rewards drawn once from the
// construction seed; episodes are continuing (truncation comes from the time
// limit wrapper). One-hot state observation; pairs with the tabular oracle.
class RandomMdp final : public Env {
 public:
  RandomMdp(int states, int actions, std::uint64_t seed)
      : num_states_(states), num_actions_(actions) {
    if (states < 2 || actions < 1) throw ConfigError("RandomMdp: degenerate sizes");
    Rng rng(seed_stream(seed, "random-mdp"));
    kernel_.assign(states, std::vector<std::vector<double>>(
                               actions, std::vector<double>(states, 0.0)));
    rewards_.assign(states, std::vector<double>(actions, 0.0));
    for (int s = 0; s < states; ++s)
      for (int a = 0; a < actions; ++a) {
        double total = 0.0;
        for (int s2 = 0; s2 < states; ++s2)
          total += (kernel_[s][a][s2] = 0.05 + rng.uniform());
        for (int s2 = 0; s2 < states; ++s2) kernel_[s][a][s2] /= total;
        rewards_[s][a] = rng.uniform();
      }
  }

  EnvSpec spec() const override {
    return {"randommdp", num_states_, num_actions_, 0, {0.0, 1.0}};
  }

  std::vector<double> reset(std::optional<std::uint64_t> seed = std::nullopt) override {
    if (seed) rng_ = Rng(seed_stream(*seed, "random-mdp-episode"));
    state_ = 0;
    active_ = true;
    return observation(state_);
  }

  StepResult step(int action) override {
    if (!active_) throw UsageError("env_step: episode already finished (randommdp)");
    detail::check_action(action, spec());
    StepResult r;
    r.reward = r.raw_reward = rewards_[state_][action];
    const double u = rng_.uniform();
    double acc = 0.0;
    int next = num_states_ - 1;
    for (int s2 = 0; s2 < num_states_; ++s2) {
      acc += kernel_[state_][action][s2];
      if (u < acc) {
        next = s2;
        break;
      }
    }
    state_ = next;
    r.obs = observation(state_);
    return r;
  }

  std::vector<double> observation(int s) const {
    std::vector<double> obs(num_states_, 0.0);
    obs[s] = 1.0;
    return obs;
  }

  oracle::TabularMDP to_tabular(double discount) const {
    oracle::TabularMDP mdp;
    mdp.num_states = num_states_;
    mdp.num_actions = num_actions_;
    mdp.discount = discount;
    mdp.transitions = kernel_;
    mdp.rewards = rewards_;
    return mdp;
  }

 private:
  int num_states_, num_actions_;
  std::vector<std::vector<std::vector<double>>> kernel_;
  std::vector<std::vector<double>> rewards_;
  Rng rng_{0};
  int state_ = 0;
  bool active_ = false;
};

// ---------------------------------------------------------------------------
// Wrappers. Composition order is observation-normalize(reward-scale(
// time-limit(raw))); every wrapper satisfies the Env contract itself.
// ---------------------------------------------------------------------------

class TimeLimit final : public Env {
 public:
  TimeLimit(std::unique_ptr<Env> inner, int max_steps)
      : inner_(std::move(inner)), max_steps_(max_steps) {
    if (max_steps < 1) throw ConfigError("TimeLimit: max_steps must be positive");
  }

  EnvSpec spec() const override {
    EnvSpec s = inner_->spec();
    s.max_episode_steps = max_steps_;
    return s;
  }

  std::vector<double> reset(std::optional<std::uint64_t> seed = std::nullopt) override {
    elapsed_ = 0;
    return inner_->reset(seed);
  }

  StepResult step(int action) override {
    StepResult r = inner_->step(action);
    ++elapsed_;
    if (!r.terminal && elapsed_ >= max_steps_) {
      r.terminal = true;
      r.truncated = true;
    }
    return r;
  }

 private:
  std::unique_ptr<Env> inner_;
  int max_steps_;
  int elapsed_ = 0;
};

// Applies reward scaling and observation normalization around an inner env.
// Statistics update only while `training` is true; an evaluation copy shares
// frozen statistics and reports raw rewards.
class NormalizedEnv final : public Env {
 public:
  NormalizedEnv(std::unique_ptr<Env> inner, double discount, bool normalize_obs = true,
                bool scale_rewards = true)
      : inner_(std::move(inner)),
        scaler_(discount),
        normalize_obs_(normalize_obs),
        scale_rewards_(scale_rewards) {}

  EnvSpec spec() const override { return inner_->spec(); }

  void set_training(bool on) { training_ = on; }

  std::vector<double> reset(std::optional<std::uint64_t> seed = std::nullopt) override {
    auto obs = inner_->reset(seed);
    return transform_obs(obs);
  }

  StepResult step(int action) override {
    StepResult r = inner_->step(action);
    r.raw_reward = r.reward;
    if (scale_rewards_) {
      if (training_) {
        r.reward = scaler_.scale(r.reward, r.terminal);
      } else {
        const double denom =
            scaler_.moments.count < 2
                ? 1.0
                : std::max(std::sqrt(scaler_.moments.variance(0) + 1e-8), 1e-4);
        r.reward = r.reward / denom;
      }
    }
    r.obs = transform_obs(r.obs);
    return r;
  }

  // Normalizes a raw observation with the current (frozen) statistics.
  std::vector<double> peek_normalize(const std::vector<double>& obs) const {
    if (!normalize_obs_) return obs;
    return normalize_observation_frozen(obs_stats_, obs);
  }

  const RunningMoments& observation_stats() const { return obs_stats_; }

  // Evaluation twin: wraps a fresh inner env, copies the statistics, frozen.
  std::unique_ptr<NormalizedEnv> eval_twin(std::unique_ptr<Env> fresh_inner) const {
    auto twin = std::make_unique<NormalizedEnv>(std::move(fresh_inner), scaler_.discount,
                                                normalize_obs_, scale_rewards_);
    twin->obs_stats_ = obs_stats_;
    twin->scaler_ = scaler_;
    twin->training_ = false;
    return twin;
  }

 private:
  std::vector<double> transform_obs(const std::vector<double>& obs) {
    if (!normalize_obs_) return obs;
    if (training_) return normalize_observation(obs_stats_, obs);
    return normalize_observation_frozen(obs_stats_, obs);
  }

  std::unique_ptr<Env> inner_;
  RunningMoments obs_stats_;
  RewardScaler scaler_;
  bool normalize_obs_;
  bool scale_rewards_;
  bool training_ = true;
};

}  // namespace streamrl
