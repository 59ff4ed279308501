#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "streamrl/bridge.hpp"

using namespace streamrl;

namespace {

// Injected by CMake: absolute path of the bridge_child helper binary.
const std::string kChild = BRIDGE_CHILD_PATH;

EnvSpec child_spec() {
  EnvSpec s;
  s.name = "bridge-child";
  s.observation_dim = 2;
  s.action_count = 3;
  return s;
}

}  // namespace

TEST_CASE("bridge round-trips reset and step") {
  BridgeEnv env(kChild + " echo", child_spec());
  const auto obs = env.reset(42);
  REQUIRE(obs == std::vector<double>{42.0, 0.5});

  const auto r = env.step(1);
  REQUIRE(r.obs == std::vector<double>{1.0, 0.5});
  REQUIRE(r.reward == 1.0);
  REQUIRE(r.raw_reward == 1.0);
  REQUIRE_FALSE(r.terminal);

  const auto done = env.step(2);
  REQUIRE(done.terminal);
  REQUIRE_THROWS_AS(env.step(0), UsageError);  // episode over, no new reset
  env.reset(7);
  REQUIRE(env.step(0).reward == 0.0);
}

TEST_CASE("bridge reset without a seed defaults to zero") {
  BridgeEnv env(kChild + " echo", child_spec());
  REQUIRE(env.reset() == std::vector<double>{0.0, 0.5});
}

TEST_CASE("bridge validates actions against the declared spec") {
  BridgeEnv env(kChild + " echo", child_spec());
  env.reset(0);
  REQUIRE_THROWS_AS(env.step(3), UsageError);
  REQUIRE_THROWS_AS(env.step(-1), UsageError);
}

TEST_CASE("bridge reports malformed replies with the offending line") {
  BridgeEnv env(kChild + " malformed", child_spec());
  try {
    env.reset(0);
    FAIL("expected EnvFault");
  } catch (const EnvFault& e) {
    REQUIRE(std::string(e.what()).find("this is not json") != std::string::npos);
  }
}

TEST_CASE("bridge flags an observation dimension mismatch") {
  EnvSpec wrong = child_spec();
  wrong.observation_dim = 5;
  BridgeEnv env(kChild + " echo", wrong);
  REQUIRE_THROWS_AS(env.reset(0), EnvFault);
}

TEST_CASE("bridge detects a child that exits immediately") {
  BridgeEnv env(kChild + " exit", child_spec());
  REQUIRE_THROWS_AS(env.reset(0), EnvFault);
}

TEST_CASE("bridge detects a child dying mid-episode") {
  BridgeEnv env(kChild + " die_after_reset", child_spec());
  env.reset(1);
  REQUIRE_THROWS_AS(env.step(0), EnvFault);
}

TEST_CASE("bridge times out on an unresponsive child") {
  BridgeEnv env(kChild + " slow", child_spec(), 0.2);
  try {
    env.reset(0);
    FAIL("expected EnvFault");
  } catch (const EnvFault& e) {
    REQUIRE(std::string(e.what()).find("timed out") != std::string::npos);
  }
}

TEST_CASE("bridge rejects a non-positive timeout") {
  REQUIRE_THROWS_AS(BridgeEnv(kChild + " echo", child_spec(), 0.0), ConfigError);
}
