#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "streamrl/agent.hpp"
#include "streamrl/bridge.hpp"
#include "streamrl/config.hpp"
#include "streamrl/env.hpp"
#include "streamrl/stats.hpp"

namespace streamrl {

// ---------------------------------------------------------------------------
// CSV plumbing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string sanitize_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

// Whole-file atomic write: build the body, then rename into place.
inline void write_file_atomic(const std::string& path, const std::string& body) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + tmp + "'");
    out << body;
  }
  fs::rename(tmp, target);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::Dqn;
  std::vector<std::string> envs;
  long total_steps = 10000;
  long eval_every = 1000;
  int eval_episodes = 5;
  long eval_cap = 1000;  // per-episode step budget during evaluation
  long log_every = 100;
  std::vector<long> seeds;
  std::string out_dir = "out";
  double eval_epsilon = 0.01;
  long inject_nan_at = -1;
};

inline ExperimentConfig experiment_from(const Config& cfg) {
  ExperimentConfig e;
  e.algorithm = algorithm_from_string(cfg.get("run.algorithm", "dqn"));
  e.envs = cfg.get_list("env.name", "chain");
  e.total_steps = cfg.get_long("run.total_steps", 10000);
  e.eval_every = cfg.get_long("run.eval_every", 1000);
  e.eval_episodes = static_cast<int>(cfg.get_long("run.eval_episodes", 5));
  e.eval_cap = cfg.get_long("run.eval_cap", 1000);
  e.log_every = cfg.get_long("run.log_every", 100);
  e.seeds = cfg.get_long_list("run.seeds", "0");
  e.out_dir = cfg.get("run.out_dir", "out");
  e.eval_epsilon = cfg.get_double("explore.eval_epsilon", cfg.get_double("explore.eps_end", 0.01));
  e.inject_nan_at = cfg.get_long("debug.inject_nan_at", -1);
  if (e.total_steps <= 0) throw ConfigError("run.total_steps must be positive");
  if (e.seeds.empty()) throw ConfigError("run.seeds must be non-empty");
  if (e.envs.empty()) throw ConfigError("env.name must name at least one environment");
  if (e.eval_episodes <= 0) throw ConfigError("run.eval_episodes must be positive");
  return e;
}

inline std::unique_ptr<Env> build_raw_env(const Config& cfg, const std::string& name) {
  if (name == "chain")
    return std::make_unique<ChainMdp>(static_cast<int>(cfg.get_long("env.chain_n", 7)));
  if (name == "gridworld")
    return std::make_unique<GridWorld>(static_cast<int>(cfg.get_long("env.grid_width", 5)),
                                       static_cast<int>(cfg.get_long("env.grid_height", 5)));
  if (name == "catch") return std::make_unique<CatchEnv>();
  if (name == "randommdp")
    return std::make_unique<RandomMdp>(
        static_cast<int>(cfg.get_long("env.mdp_states", 6)),
        static_cast<int>(cfg.get_long("env.mdp_actions", 3)),
        static_cast<std::uint64_t>(cfg.get_long("env.mdp_seed", 0)));
  if (name == "bridge") {
    const std::string command = cfg.get("env.bridge_command", "");
    if (command.empty()) throw ConfigError("env.bridge_command required for bridge env");
    EnvSpec spec;
    spec.name = "bridge";
    spec.observation_dim = static_cast<int>(cfg.get_long("env.bridge_obs_dim", 0));
    spec.action_count = static_cast<int>(cfg.get_long("env.bridge_actions", 0));
    if (spec.observation_dim <= 0 || spec.action_count <= 0)
      throw ConfigError("bridge env needs env.bridge_obs_dim and env.bridge_actions");
    return std::make_unique<BridgeEnv>(command, spec,
                                       cfg.get_double("env.bridge_timeout", 10.0));
  }
  throw ConfigError("unknown env '" + name + "' (chain|gridworld|catch|randommdp|bridge)");
}

inline std::unique_ptr<Env> apply_time_limit(const Config& cfg, std::unique_ptr<Env> env) {
  const long limit = cfg.get_long("env.time_limit", 0);
  if (limit > 0) return std::make_unique<TimeLimit>(std::move(env), static_cast<int>(limit));
  return env;
}

inline std::unique_ptr<NormalizedEnv> build_env(const Config& cfg, const std::string& name,
                                                double discount) {
  auto raw = apply_time_limit(cfg, build_raw_env(cfg, name));
  return std::make_unique<NormalizedEnv>(std::move(raw), discount,
                                         cfg.get_bool("env.normalize_obs", true),
                                         cfg.get_bool("env.scale_rewards", true));
}

// Default per-algorithm config with any agent.*/explore.* overrides applied.
inline AgentConfig agent_config_from(const Config& cfg, Algorithm alg, int input_dim,
                                     int actions) {
  AgentConfig a = default_agent_config(alg, input_dim, actions,
                                       cfg.get_int_list("agent.hidden", "32"));
  if (cfg.has("run.objective"))
    a.objective = objective_from_string(cfg.get("run.objective", ""));
  a.discount = cfg.get_double("agent.discount", a.discount);
  a.eta = cfg.get_double("agent.eta", a.eta);
  a.beta0 = cfg.get_double("agent.beta0", a.beta0);
  a.beta1 = cfg.get_double("agent.beta1", a.beta1);
  a.optim_epsilon = cfg.get_double("agent.optim_epsilon", a.optim_epsilon);
  a.bias_correction = cfg.get_bool("agent.bias_correction", a.bias_correction);
  a.huber_kappa = cfg.get_double("agent.huber_kappa", a.huber_kappa);
  a.obgd_kappa = cfg.get_double("agent.obgd_kappa", a.obgd_kappa);
  a.lambda = cfg.get_double("agent.lambda", a.lambda);
  a.v_min = cfg.get_double("agent.v_min", a.v_min);
  a.v_max = cfg.get_double("agent.v_max", a.v_max);
  const bool distributional =
      a.objective == Objective::Categorical || a.objective == Objective::Quantile;
  const int default_atoms = distributional ? (a.objective == Objective::Categorical ? 200 : 51) : 1;
  a.net.atoms_per_action = static_cast<int>(cfg.get_long("agent.atoms", default_atoms));
  a.net.sparsity = cfg.get_double("agent.sparsity", a.net.sparsity);
  a.net.activation = activation_from_string(
      cfg.get("agent.activation", to_string(a.net.activation)));
  a.schedule.eps_start = cfg.get_double("explore.eps_start", a.schedule.eps_start);
  a.schedule.eps_end = cfg.get_double("explore.eps_end", a.schedule.eps_end);
  a.schedule.decay_steps = cfg.get_long("explore.decay_steps", a.schedule.decay_steps);
  a.validate();
  return a;
}

// ---------------------------------------------------------------------------
// Grid runner
// ---------------------------------------------------------------------------

struct EvalRow {
  std::string algorithm, env;
  long seed = 0;
  long step = 0;
  double eval_return = 0.0;
};

struct RunOutcome {
  std::string algorithm, env;
  long seed = 0;
  bool ok = true;
  long last_step = 0;
  std::string detail;  // "ok" or the fault diagnostic
};

struct GridResult {
  std::vector<RunOutcome> outcomes;
  std::vector<EvalRow> eval_rows;
};

namespace detail {

struct RunContext {
  const Config& cfg;
  const ExperimentConfig& exp;
  std::string env_name;
  long seed;
  std::ostringstream* train_csv;
  std::vector<EvalRow>* eval_rows;
};

inline void evaluate(const RunContext& ctx, Agent& agent, const NormalizedEnv& train_env,
                     long at_step) {
  auto eval_env = train_env.eval_twin(
      apply_time_limit(ctx.cfg, build_raw_env(ctx.cfg, ctx.env_name)));
  Rng eval_rng(seed_stream(static_cast<std::uint64_t>(ctx.seed),
                           "eval-" + std::to_string(at_step)));
  double total = 0.0;
  for (int ep = 0; ep < ctx.exp.eval_episodes; ++ep) {
    eval_env->reset(seed_stream(static_cast<std::uint64_t>(ctx.seed),
                                "eval-ep-" + std::to_string(at_step) + "-" +
                                    std::to_string(ep)));
    EpisodeOptions opts;
    opts.learn = false;
    opts.epsilon_override = ctx.exp.eval_epsilon;
    const EpisodeResult r = run_episode(agent, *eval_env, eval_rng, ctx.exp.eval_cap, opts);
    total += r.raw_return;
  }
  ctx.eval_rows->push_back({to_string(agent.config().algorithm), ctx.env_name, ctx.seed,
                            at_step, total / ctx.exp.eval_episodes});
}

inline RunOutcome train_run(const RunContext& ctx) {
  RunOutcome outcome{to_string(ctx.exp.algorithm), ctx.env_name, ctx.seed, true, 0, "ok"};
  try {
    auto env = build_env(ctx.cfg, ctx.env_name,
                         ctx.cfg.get_double("agent.discount", 0.99));
    AgentConfig acfg = agent_config_from(ctx.cfg, ctx.exp.algorithm,
                                         env->spec().observation_dim,
                                         env->spec().action_count);
    acfg.seed = seed_stream(static_cast<std::uint64_t>(ctx.seed), "agent");
    Agent agent(acfg);
    Rng explore_rng(seed_stream(static_cast<std::uint64_t>(ctx.seed), "explore"));

    std::vector<double> obs =
        env->reset(seed_stream(static_cast<std::uint64_t>(ctx.seed), "env"));
    for (long step = 0; step < ctx.exp.total_steps; ++step) {
      outcome.last_step = step;
      const auto [action, greedy] = agent.act(obs, step, explore_rng);
      const StepResult sr = env->step(action);
      if (step == ctx.exp.inject_nan_at)
        agent.mutable_params()[0] = std::nan("");
      const Transition t{obs, action, sr.reward, sr.obs, sr.terminal, sr.truncated, greedy};
      const StepReport rep = agent.observe(t);
      if (ctx.exp.log_every > 0 && step % ctx.exp.log_every == 0)
        *ctx.train_csv << outcome.algorithm << ',' << ctx.env_name << ',' << ctx.seed << ','
                       << step << ',' << format_double(rep.delta) << ','
                       << format_double(rep.loss) << ',' << format_double(rep.update_norm)
                       << '\n';
      obs = sr.terminal ? env->reset() : sr.obs;
      const long done = step + 1;
      if (done == ctx.exp.total_steps ||
          (ctx.exp.eval_every > 0 && done % ctx.exp.eval_every == 0))
        evaluate(ctx, agent, *env, done);
    }
    outcome.last_step = ctx.exp.total_steps;
  } catch (const NumericFault& e) {
    outcome.ok = false;
    outcome.detail = std::string("numeric_fault: ") + e.what();
  } catch (const EnvFault& e) {
    outcome.ok = false;
    outcome.detail = std::string("env_fault: ") + e.what();
  }
  return outcome;
}

}  // namespace detail

// Trains every (env, seed) cell sequentially and writes train.csv, eval.csv,
// and runs.csv under run.out_dir. Numeric/environment faults become failure
// rows instead of aborting the grid.
inline GridResult run_grid(const Config& cfg) {
  const ExperimentConfig exp = experiment_from(cfg);
  GridResult result;
  std::ostringstream train_csv;
  train_csv << "algorithm,env,seed,step,delta,loss,update_norm\n";

  for (const auto& env_name : exp.envs)
    for (long seed : exp.seeds) {
      detail::RunContext ctx{cfg, exp, env_name, seed, &train_csv, &result.eval_rows};
      result.outcomes.push_back(detail::train_run(ctx));
    }

  std::ostringstream eval_csv;
  eval_csv << "algorithm,env,seed,step,eval_return\n";
  for (const auto& row : result.eval_rows)
    eval_csv << row.algorithm << ',' << row.env << ',' << row.seed << ',' << row.step << ','
             << format_double(row.eval_return) << '\n';

  std::ostringstream runs_csv;
  runs_csv << "algorithm,env,seed,status,last_step,detail\n";
  for (const auto& o : result.outcomes)
    runs_csv << o.algorithm << ',' << o.env << ',' << o.seed << ','
             << (o.ok ? "ok" : "failed") << ',' << o.last_step << ','
             << detail::sanitize_field(o.detail) << '\n';

  detail::write_file_atomic(exp.out_dir + "/train.csv", train_csv.str());
  detail::write_file_atomic(exp.out_dir + "/eval.csv", eval_csv.str());
  detail::write_file_atomic(exp.out_dir + "/runs.csv", runs_csv.str());
  return result;
}

// ---------------------------------------------------------------------------
// Toy optimization study (two-parameter Adam problems)
// ---------------------------------------------------------------------------

enum class ToyKind { Noisy, Sparse };

inline ToyKind toy_kind_from_string(const std::string& s) {
  if (s == "noisy") return ToyKind::Noisy;
  if (s == "sparse") return ToyKind::Sparse;
  throw ConfigError("unknown toy kind '" + s + "' (noisy|sparse)");
}

struct ToyProblemConfig {
  ToyKind kind = ToyKind::Noisy;
  double w0_x = 1.5;
  double w0_y = 1.5;
  long steps = 10000;
  double eta = 0.3;
  double beta0 = 0.9;
  double beta1 = 0.99;
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  std::string out;  // CSV path; empty writes nothing

  void validate() const {
    if (steps <= 0) throw ConfigError("toy.steps must be positive");
    if (eta < 0.0) throw ConfigError("toy.eta must be non-negative");
  }
};

inline ToyProblemConfig toy_from(const Config& cfg) {
  ToyProblemConfig t;
  t.kind = toy_kind_from_string(cfg.get("toy.kind", "noisy"));
  t.w0_x = cfg.get_double("toy.w0_x", t.w0_x);
  t.w0_y = cfg.get_double("toy.w0_y", t.w0_y);
  t.steps = cfg.get_long("toy.steps", t.steps);
  t.eta = cfg.get_double("toy.eta", t.eta);
  t.beta0 = cfg.get_double("toy.beta0", t.beta0);
  t.beta1 = cfg.get_double("toy.beta1", t.beta1);
  t.epsilon = cfg.get_double("toy.epsilon", t.epsilon);
  t.seed = static_cast<std::uint64_t>(cfg.get_long("toy.seed", 0));
  t.out = cfg.get("toy.out", "");
  t.validate();
  return t;
}

// The y gradient is always 0.1*w_y; the x gradient is sign-noised (noisy) or
// zeroed 95% of the time (sparse). One rng draw per step in either kind, so
// equal seeds pair trajectories across epsilon settings.
inline std::pair<double, double> run_toy(const ToyProblemConfig& cfg) {
  cfg.validate();
  Rng rng(seed_stream(cfg.seed, "toy"));
  ParamVector w{cfg.w0_x, cfg.w0_y};
  AdamState st(2);
  st.beta0 = cfg.beta0;
  st.beta1 = cfg.beta1;
  st.epsilon = cfg.epsilon;

  std::ostringstream csv;
  csv << "step,w_x,w_y,g_x,g_y\n";
  for (long t = 0; t < cfg.steps; ++t) {
    const double gy = 0.1 * w[1];
    double gx = 0.0;
    if (cfg.kind == ToyKind::Noisy)
      gx = (rng.bernoulli(0.5) ? 1.0 : -1.0) * 0.1 * w[0];
    else if (rng.uniform() < 0.05)
      gx = 0.1 * w[0];
    adam_step(st, w, {gx, gy}, cfg.eta);
    if (!cfg.out.empty())
      csv << t << ',' << format_double(w[0]) << ',' << format_double(w[1]) << ','
          << format_double(gx) << ',' << format_double(gy) << '\n';
  }
  if (!cfg.out.empty()) detail::write_file_atomic(cfg.out, csv.str());
  return {w[0], w[1]};
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

// "agent.eta=1e-4,1e-3;agent.beta0=0.9,0.999" -> two axes.
inline std::vector<SweepAxis> parse_sweep_axes(const std::string& text) {
  std::vector<SweepAxis> axes;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos)
      throw ConfigError("sweep axis '" + part + "' has no '='");
    SweepAxis axis;
    axis.key = part.substr(0, eq);
    std::string item;
    std::istringstream vals(part.substr(eq + 1));
    while (std::getline(vals, item, ',')) axis.values.push_back(item);
    if (axis.key.empty() || axis.values.empty())
      throw ConfigError("sweep axis '" + part + "' is empty");
    axes.push_back(std::move(axis));
  }
  if (axes.empty()) throw ConfigError("sweep.axes is empty");
  return axes;
}

// IQM over (env x seed x last-W evaluations) for one grid's eval rows.
inline double sweep_cell_aggregate(const std::vector<EvalRow>& rows, int window) {
  std::map<std::pair<std::string, long>, std::vector<double>> by_run;
  for (const auto& r : rows) by_run[{r.env, r.seed}].push_back(r.eval_return);
  std::vector<double> samples;
  for (auto& [run, xs] : by_run) {
    const std::size_t keep = std::min<std::size_t>(window, xs.size());
    samples.insert(samples.end(), xs.end() - keep, xs.end());
  }
  if (samples.empty()) throw UsageError("sweep cell produced no evaluations");
  return iqm(samples);
}

// Cartesian product over the axes; each cell runs a full grid into its own
// subdirectory, then lands one aggregate row in sweep.csv.
inline std::vector<std::pair<std::vector<std::string>, double>> run_sweep(const Config& base) {
  const auto axes = parse_sweep_axes(base.get("sweep.axes", ""));
  const int window = static_cast<int>(base.get_long("sweep.window", 10));
  const std::string out_dir = base.get("run.out_dir", "out");

  std::vector<std::size_t> index(axes.size(), 0);
  std::vector<std::pair<std::vector<std::string>, double>> rows;
  std::ostringstream csv;
  for (const auto& axis : axes) csv << axis.key << ',';
  csv << "iqm,runs,failures\n";

  long cell = 0;
  for (;;) {
    Config cfg = base;
    std::vector<std::string> setting;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      cfg.values[axes[a].key] = axes[a].values[index[a]];
      setting.push_back(axes[a].values[index[a]]);
    }
    validate_keys(cfg);
    cfg.values["run.out_dir"] = out_dir + "/cell_" + std::to_string(cell);
    const GridResult grid = run_grid(cfg);
    const double aggregate = sweep_cell_aggregate(grid.eval_rows, window);
    int failures = 0;
    for (const auto& o : grid.outcomes) failures += o.ok ? 0 : 1;
    for (const auto& v : setting) csv << v << ',';
    csv << format_double(aggregate) << ',' << grid.outcomes.size() << ',' << failures << '\n';
    rows.emplace_back(setting, aggregate);

    ++cell;
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++index[a] < axes[a].values.size()) break;
      index[a] = 0;
      if (a == 0) {
        csv.flush();
        detail::write_file_atomic(out_dir + "/sweep.csv", csv.str());
        return rows;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Report: aggregates + probability-of-improvement table
// ---------------------------------------------------------------------------

inline std::vector<EvalRow> read_eval_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("report: cannot open '" + path + "'");
  std::vector<EvalRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = detail::split_csv_line(line);
    if (f.size() != 5)
      throw ConfigError("report: malformed eval row in '" + path + "': " + line);
    rows.push_back({f[0], f[1], std::stol(f[2]), std::stol(f[3]), std::stod(f[4])});
  }
  return rows;
}

inline std::map<std::string, Baseline> read_baselines_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("report: cannot open baselines '" + path + "'");
  std::map<std::string, Baseline> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = detail::split_csv_line(line);
    if (f.size() != 3)
      throw ConfigError("report: malformed baseline row: " + line);
    out[f[0]] = {std::stod(f[1]), std::stod(f[2])};
  }
  return out;
}

struct ReportOptions {
  int window = 10;
  int resamples = 2000;
  double level = 0.95;
  std::string baselines_path;  // empty: identity normalization
  std::string out_path;        // empty: stdout only
};

// Per (algorithm, env, seed): score = mean of the last `window` evaluations.
inline std::map<std::string, ScoreMatrix> scores_by_algorithm(
    const std::vector<EvalRow>& rows, const ReportOptions& opts) {
  std::map<std::string, std::map<std::pair<std::string, long>, std::vector<double>>> grouped;
  for (const auto& r : rows) grouped[r.algorithm][{r.env, r.seed}].push_back(r.eval_return);

  std::map<std::string, Baseline> baselines;
  const bool have_baselines = !opts.baselines_path.empty();
  if (have_baselines) baselines = read_baselines_csv(opts.baselines_path);

  std::map<std::string, ScoreMatrix> out;
  for (auto& [alg, runs] : grouped) {
    std::map<std::string, std::vector<double>> raw;
    for (auto& [key, xs] : runs) {
      const std::size_t keep = std::min<std::size_t>(opts.window, xs.size());
      double mean = 0.0;
      for (std::size_t i = xs.size() - keep; i < xs.size(); ++i) mean += xs[i];
      raw[key.first].push_back(mean / keep);
    }
    if (have_baselines) {
      out[alg] = normalize_scores(raw, baselines);
    } else {
      ScoreMatrix m;
      m.scores = std::move(raw);
      out[alg] = std::move(m);
    }
  }
  return out;
}

inline std::string build_report(const std::vector<EvalRow>& rows, const ReportOptions& opts) {
  const auto by_alg = scores_by_algorithm(rows, opts);
  if (by_alg.empty()) throw ConfigError("report: no eval rows");

  std::ostringstream csv;
  if (opts.resamples < 100)
    csv << "# warning: resamples < 100 gives unstable confidence intervals\n";
  csv << "algorithm,metric,point,ci_low,ci_high\n";
  for (const auto& [alg, matrix] : by_alg) {
    const double point = iqm(matrix.pooled());
    Rng rng(seed_stream(0, "report-" + alg));
    const BootstrapResult ci = stratified_bootstrap_ci(
        matrix, [](const std::vector<double>& xs) { return iqm(xs); }, opts.resamples,
        opts.level, rng);
    csv << alg << ",iqm," << format_double(point) << ',' << format_double(ci.low) << ','
        << format_double(ci.high) << '\n';
  }
  for (const auto& [ax, mx] : by_alg)
    for (const auto& [ay, my] : by_alg) {
      if (ax == ay) continue;
      const double p = probability_of_improvement(mx, my);
      csv << ax << ",poi_vs_" << ay << ',' << format_double(p) << ','
          << format_double(p) << ',' << format_double(p) << '\n';
    }
  return csv.str();
}

inline std::string report(const std::vector<std::string>& eval_paths,
                          const ReportOptions& opts) {
  std::vector<EvalRow> rows;
  for (const auto& p : eval_paths) {
    auto part = read_eval_csv(p);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const std::string body = build_report(rows, opts);
  if (!opts.out_path.empty()) detail::write_file_atomic(opts.out_path, body);
  if (opts.resamples < 100)
    std::cerr << "warning: report.resamples < 100 gives unstable confidence intervals\n";
  return body;
}

}  // namespace streamrl
