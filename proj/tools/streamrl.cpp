// Command-line front end: run training grids, toy optimization studies,
// hyperparameter sweeps, and evaluation reports.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "streamrl/streamrl.hpp"

namespace {

using streamrl::Config;

// Every config key doubles as a CLI flag (--agent.eta 3e-4). Precedence:
// config file < STREAMRL_* environment variables < flags.
void mirror_config_keys(CLI::App& app, std::map<std::string, std::string>& overrides) {
  for (const auto& key : streamrl::known_keys())
    app.add_option_function<std::string>(
        "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; });
}

Config assemble_config(const std::string& config_path,
                       const std::map<std::string, std::string>& overrides) {
  Config cfg;
  if (!config_path.empty()) cfg = streamrl::load_config(config_path);
  streamrl::apply_env_overrides(cfg);
  for (const auto& [k, v] : overrides) cfg.values[k] = v;
  streamrl::validate_keys(cfg);
  return cfg;
}

int cmd_run(const Config& cfg) {
  const streamrl::GridResult result = streamrl::run_grid(cfg);
  int failures = 0;
  for (const auto& o : result.outcomes) {
    if (!o.ok) ++failures;
    std::cout << o.algorithm << " on " << o.env << " seed " << o.seed << ": "
              << (o.ok ? "ok" : o.detail) << " (last step " << o.last_step << ")\n";
  }
  std::cout << result.outcomes.size() << " runs, " << failures << " failed; outputs in "
            << cfg.get("run.out_dir", "out") << "\n";
  return 0;  // recorded failures are a reported outcome, not an error
}

int cmd_toy(Config cfg) {
  if (!cfg.has("toy.out")) cfg.values["toy.out"] = "toy.csv";
  const streamrl::ToyProblemConfig tcfg = streamrl::toy_from(cfg);
  const auto [wx, wy] = streamrl::run_toy(tcfg);
  std::cout << "final w = (" << streamrl::format_double(wx) << ", "
            << streamrl::format_double(wy) << "); trajectory in " << tcfg.out << "\n";
  return 0;
}

int cmd_sweep(const Config& cfg) {
  const auto rows = streamrl::run_sweep(cfg);
  for (const auto& [setting, aggregate] : rows) {
    for (const auto& v : setting) std::cout << v << ' ';
    std::cout << "-> iqm " << streamrl::format_double(aggregate) << "\n";
  }
  std::cout << rows.size() << " sweep cells; outputs in " << cfg.get("run.out_dir", "out")
            << "\n";
  return 0;
}

int cmd_report(const Config& cfg, const std::vector<std::string>& eval_paths,
               const std::string& out_path) {
  streamrl::ReportOptions opts;
  opts.window = static_cast<int>(cfg.get_long("report.window", 10));
  opts.resamples = static_cast<int>(cfg.get_long("report.resamples", 2000));
  opts.level = cfg.get_double("report.level", 0.95);
  opts.baselines_path = cfg.get("report.baselines", "");
  opts.out_path = out_path;
  std::cout << streamrl::report(eval_paths, opts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streamrl: streaming reinforcement-learning toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> eval_paths;
  std::string report_out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "config file (key = value lines)");
    mirror_config_keys(*sub, overrides);
  };

  CLI::App* run = app.add_subcommand("run", "train an (env x seed) grid");
  add_common(run);
  CLI::App* toy = app.add_subcommand("toy", "two-parameter Adam study");
  add_common(toy);
  CLI::App* sweep = app.add_subcommand("sweep", "Cartesian hyperparameter sweep");
  add_common(sweep);
  CLI::App* report = app.add_subcommand("report", "aggregate eval CSVs");
  add_common(report);
  report->add_option("evals", eval_paths, "eval.csv files")->required();
  report->add_option("-o,--out", report_out, "write the report CSV here too");

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = assemble_config(config_path, overrides);
    if (run->parsed()) return cmd_run(cfg);
    if (toy->parsed()) return cmd_toy(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (report->parsed()) return cmd_report(cfg, eval_paths, report_out);
  } catch (const streamrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
