#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "streamrl/common.hpp"

namespace streamrl {

// Flat `key = value` configuration with dotted sections. The key set is
// closed: anything outside known_keys() is a hard error, so typos cannot
// silently fall back to defaults.
struct Config {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' wants a number, got '" + it->second + "'");
    }
  }

  long get_long(const std::string& key, long fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      std::size_t pos = 0;
      const long v = std::stol(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' wants an integer, got '" + it->second + "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: key '" + key + "' wants a boolean, got '" + v + "'");
  }

  std::vector<std::string> get_list(const std::string& key,
                                    const std::string& fallback) const {
    const std::string raw = get(key, fallback);
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(raw);
    while (std::getline(in, item, ',')) {
      // trim
      const auto a = item.find_first_not_of(" \t");
      const auto b = item.find_last_not_of(" \t");
      if (a == std::string::npos) continue;
      out.push_back(item.substr(a, b - a + 1));
    }
    return out;
  }

  std::vector<long> get_long_list(const std::string& key, const std::string& fallback) const {
    std::vector<long> out;
    for (const auto& s : get_list(key, fallback)) {
      try {
        out.push_back(std::stol(s));
      } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' wants integers, got '" + s + "'");
      }
    }
    return out;
  }

  std::vector<int> get_int_list(const std::string& key, const std::string& fallback) const {
    std::vector<int> out;
    for (long v : get_long_list(key, fallback)) out.push_back(static_cast<int>(v));
    return out;
  }
};

// Every key the toolkit understands, with its default shown by print_config
// when unset. Grouped by section.
inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      // run control
      "run.algorithm", "run.objective", "run.total_steps", "run.eval_every",
      "run.eval_episodes", "run.eval_cap", "run.log_every", "run.seeds", "run.out_dir",
      // environment
      "env.name", "env.chain_n", "env.grid_width", "env.grid_height", "env.mdp_states",
      "env.mdp_actions", "env.mdp_seed", "env.bridge_command", "env.bridge_obs_dim",
      "env.bridge_actions", "env.bridge_timeout", "env.time_limit", "env.normalize_obs",
      "env.scale_rewards",
      // agent / optimizer
      "agent.discount", "agent.eta", "agent.beta0", "agent.beta1", "agent.optim_epsilon",
      "agent.bias_correction", "agent.huber_kappa", "agent.obgd_kappa", "agent.lambda",
      "agent.v_min", "agent.v_max", "agent.atoms", "agent.hidden", "agent.sparsity",
      "agent.activation",
      // exploration
      "explore.eps_start", "explore.eps_end", "explore.decay_steps", "explore.eval_epsilon",
      // toy optimization study
      "toy.kind", "toy.w0_x", "toy.w0_y", "toy.steps", "toy.eta", "toy.beta0", "toy.beta1",
      "toy.epsilon", "toy.seed", "toy.out",
      // sweeps and reports
      "sweep.axes", "sweep.window", "report.window", "report.resamples", "report.level",
      "report.baselines",
      // debugging hooks
      "debug.inject_nan_at",
  };
  return keys;
}

inline void validate_keys(const Config& cfg) {
  const auto& known = known_keys();
  for (const auto& [key, value] : cfg.values) {
    bool ok = false;
    for (const auto& k : known)
      if (k == key) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("config: unknown key '" + key + "'");
  }
}

// Lines of `key = value`; '#' starts a comment; blank lines ignored. The
// first '=' separates key from value, so values may themselves contain '='.
inline Config parse_config_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " has no '='");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config: line " + std::to_string(lineno) + " has an empty key");
    cfg.values[key] = value;
  }
  validate_keys(cfg);
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// STREAMRL_AGENT_ETA=3e-4 overrides agent.eta. The mapping runs over the
// closed schema, so only known keys can arrive this way.
inline std::string env_var_for_key(const std::string& key) {
  std::string name = "STREAMRL_";
  for (char c : key)
    name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

inline void apply_env_overrides(Config& cfg) {
  for (const auto& key : known_keys()) {
    const char* v = std::getenv(env_var_for_key(key).c_str());
    if (v != nullptr) cfg.values[key] = v;
  }
}

// Canonical text form; parse(print(cfg)) == cfg.
inline std::string print_config(const Config& cfg) {
  std::ostringstream out;
  for (const auto& [key, value] : cfg.values) out << key << " = " << value << "\n";
  return out.str();
}

}  // namespace streamrl
