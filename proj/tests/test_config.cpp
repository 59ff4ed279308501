#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <set>

#include "streamrl/config.hpp"

using namespace streamrl;

TEST_CASE("config parses key value lines with comments") {
  const auto cfg = parse_config_text(
      "# experiment setup\n"
      "env.name = chain   # trailing comment\n"
      "\n"
      "agent.eta = 0.5\n"
      "run.total_steps=1000\n"
      "  run.seeds =  1, 2, 3 \n");
  REQUIRE(cfg.get("env.name", "") == "chain");
  REQUIRE(cfg.get_double("agent.eta", 0.0) == 0.5);
  REQUIRE(cfg.get_long("run.total_steps", 0) == 1000);
  REQUIRE(cfg.get_long_list("run.seeds", "") == std::vector<long>{1, 2, 3});
  REQUIRE(cfg.has("agent.eta"));
  REQUIRE_FALSE(cfg.has("agent.beta0"));
}

TEST_CASE("config splits on the first equals sign only") {
  const auto cfg = parse_config_text("sweep.axes = agent.eta=0.1,0.2;agent.lambda=0.8\n");
  REQUIRE(cfg.get("sweep.axes", "") == "agent.eta=0.1,0.2;agent.lambda=0.8");
}

TEST_CASE("config rejects unknown keys, missing equals, empty keys") {
  REQUIRE_THROWS_AS(parse_config_text("agent.learning_rate = 3\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config_text("just some words\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config_text(" = 5\n"), ConfigError);
  try {
    parse_config_text("env.name = chain\nbogus.key = 1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(std::string(e.what()).find("bogus.key") != std::string::npos);
  }
}

TEST_CASE("typed getters validate their parses") {
  Config cfg;
  cfg.values["agent.eta"] = "fast";
  REQUIRE_THROWS_AS(cfg.get_double("agent.eta", 0.0), ConfigError);
  cfg.values["run.total_steps"] = "10k";
  REQUIRE_THROWS_AS(cfg.get_long("run.total_steps", 0), ConfigError);
  cfg.values["env.normalize_obs"] = "maybe";
  REQUIRE_THROWS_AS(cfg.get_bool("env.normalize_obs", true), ConfigError);
  cfg.values["env.normalize_obs"] = "yes";
  REQUIRE(cfg.get_bool("env.normalize_obs", false));
  cfg.values["env.normalize_obs"] = "0";
  REQUIRE_FALSE(cfg.get_bool("env.normalize_obs", true));
  cfg.values["run.seeds"] = "1,two";
  REQUIRE_THROWS_AS(cfg.get_long_list("run.seeds", ""), ConfigError);

  REQUIRE(cfg.get_double("agent.beta0", 0.9) == 0.9);  // fallback when unset
  REQUIRE(cfg.get_int_list("agent.hidden", "32,16") == std::vector<int>{32, 16});
}

TEST_CASE("config round-trips through its printed form") {
  const std::string text =
      "agent.eta = 0.001\n"
      "env.name = gridworld\n"
      "run.seeds = 0,1,2\n"
      "sweep.axes = agent.lambda=0.0,0.8\n";
  const auto cfg = parse_config_text(text);
  const auto reparsed = parse_config_text(print_config(cfg));
  REQUIRE(reparsed.values == cfg.values);
}

TEST_CASE("environment variables override file values") {
  auto cfg = parse_config_text("agent.eta = 0.25\nenv.name = chain\n");
  REQUIRE(env_var_for_key("agent.eta") == "STREAMRL_AGENT_ETA");
  setenv("STREAMRL_AGENT_ETA", "0.75", 1);
  setenv("STREAMRL_RUN_TOTAL_STEPS", "500", 1);
  apply_env_overrides(cfg);
  unsetenv("STREAMRL_AGENT_ETA");
  unsetenv("STREAMRL_RUN_TOTAL_STEPS");
  REQUIRE(cfg.get_double("agent.eta", 0.0) == 0.75);
  REQUIRE(cfg.get_long("run.total_steps", 0) == 500);  // introduced, not just replaced
  REQUIRE(cfg.get("env.name", "") == "chain");         // untouched keys survive
}

TEST_CASE("load_config reports missing files") {
  REQUIRE_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("every known key maps to a distinct env var") {
  std::set<std::string> seen;
  for (const auto& key : known_keys()) {
    const auto var = env_var_for_key(key);
    REQUIRE(var.rfind("STREAMRL_", 0) == 0);
    REQUIRE(seen.insert(var).second);
  }
}
