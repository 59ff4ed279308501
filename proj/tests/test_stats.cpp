#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "streamrl/stats.hpp"

using namespace streamrl;

namespace {

ScoreMatrix matrix_of(std::map<std::string, std::vector<double>> scores) {
  ScoreMatrix m;
  m.scores = std::move(scores);
  return m;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("run record wants strictly increasing steps") {
  RunRecord rec;
  rec.series = {{10, 0.5}, {20, 0.7}, {30, 0.6}};
  REQUIRE_NOTHROW(rec.validate());
  rec.series.push_back({30, 0.8});
  REQUIRE_THROWS_AS(rec.validate(), UsageError);
}

TEST_CASE("iqm trims a quarter from each side") {
  REQUIRE(iqm({1, 2, 3, 4, 5, 6, 7, 8}) == Catch::Approx(4.5).margin(1e-15));
  REQUIRE(iqm({3, 3, 3}) == 3.0);
  REQUIRE(iqm({5}) == 5.0);
  // under four samples nothing is trimmed: plain mean
  REQUIRE(iqm({1, 2, 9}) == Catch::Approx(4.0).margin(1e-15));
  // an outlier outside the middle half has no influence
  REQUIRE(iqm({1, 2, 3, 4, 5, 6, 7, 1e9}) == iqm({1, 2, 3, 4, 5, 6, 7, 8}));
  REQUIRE_THROWS_AS(iqm({}), UsageError);
}

TEST_CASE("iqm is permutation invariant and monotone") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(1 + rng.below_int(20));
    for (double& x : xs) x = rng.uniform(-10.0, 10.0);
    auto shuffled = xs;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    REQUIRE(iqm(shuffled) == iqm(xs));

    const double before = iqm(xs);
    auto bumped = xs;
    bumped[rng.below(bumped.size())] += 0.5;
    REQUIRE(iqm(bumped) >= before - 1e-12);
  }
}

TEST_CASE("iqm commutes with positive affine maps") {
  Rng rng(8);
  std::vector<double> xs(13);
  for (double& x : xs) x = rng.uniform(-5.0, 5.0);
  std::vector<double> mapped(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) mapped[i] = 2.5 * xs[i] - 1.0;
  REQUIRE(iqm(mapped) == Catch::Approx(2.5 * iqm(xs) - 1.0).margin(1e-12));
}

TEST_CASE("score normalization maps the baseline pair onto 0 and 1") {
  const std::map<std::string, std::vector<double>> raw{{"a", {0.0, 10.0, 5.0}}};
  const std::map<std::string, Baseline> baselines{{"a", {0.0, 10.0}}};
  const auto m = normalize_scores(raw, baselines);
  REQUIRE(m.scores.at("a") == std::vector<double>{0.0, 1.0, 0.5});

  const std::map<std::string, Baseline> shifted{{"a", {-2.0, 2.0}}};
  const auto s = normalize_scores(raw, shifted);
  REQUIRE(s.scores.at("a")[0] == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(s.scores.at("a")[1] == Catch::Approx(3.0).margin(1e-15));

  REQUIRE_THROWS_AS(normalize_scores({{"b", {1.0}}}, baselines), ConfigError);
  const std::map<std::string, Baseline> degenerate{{"a", {1.0, 1.0}}};
  REQUIRE_THROWS_AS(normalize_scores(raw, degenerate), ConfigError);
}

TEST_CASE("pooled flattens every stratum") {
  const auto m = matrix_of({{"a", {1.0, 2.0}}, {"b", {3.0}}});
  REQUIRE(m.pooled() == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("probability of improvement on hand fixtures") {
  const auto ones = matrix_of({{"e", {1.0, 1.0}}});
  REQUIRE(probability_of_improvement(ones, ones) == 0.5);

  const auto high = matrix_of({{"e", {2.0, 3.0}}});
  const auto low = matrix_of({{"e", {0.0, 1.0}}});
  REQUIRE(probability_of_improvement(high, low) == 1.0);
  REQUIRE(probability_of_improvement(low, high) == 0.0);

  // {1,3} vs {2}: one win, one loss
  const auto straddle = matrix_of({{"e", {1.0, 3.0}}});
  const auto middle = matrix_of({{"e", {2.0}}});
  REQUIRE(probability_of_improvement(straddle, middle) == 0.5);

  // ties count half
  const auto tie_a = matrix_of({{"e", {1.0, 2.0}}});
  const auto tie_b = matrix_of({{"e", {2.0}}});
  REQUIRE(probability_of_improvement(tie_a, tie_b) == 0.25);

  // unshared environments are ignored; none shared is an error
  const auto with_extra = matrix_of({{"e", {5.0}}, {"only-x", {9.0}}});
  REQUIRE(probability_of_improvement(with_extra, low) == 1.0);
  const auto other = matrix_of({{"elsewhere", {1.0}}});
  REQUIRE_THROWS_AS(probability_of_improvement(ones, other), UsageError);
}

TEST_CASE("probability of improvement is exactly antisymmetric") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    ScoreMatrix x, y;
    const int envs = 1 + rng.below_int(4);
    for (int e = 0; e < envs; ++e) {
      const std::string name = "env-" + std::to_string(e);
      auto& xs = x.scores[name];
      auto& ys = y.scores[name];
      xs.resize(1 + rng.below_int(7));
      ys.resize(1 + rng.below_int(7));
      for (double& v : xs) v = std::round(rng.uniform(-5.0, 5.0) * 4.0) / 4.0;
      for (double& v : ys) v = std::round(rng.uniform(-5.0, 5.0) * 4.0) / 4.0;
    }
    const double pxy = probability_of_improvement(x, y);
    const double pyx = probability_of_improvement(y, x);
    REQUIRE(pxy + pyx == 1.0);  // exact, not approximate
    REQUIRE(pxy >= 0.0);
    REQUIRE(pxy <= 1.0);
  }
}

TEST_CASE("bootstrap of a constant sample collapses to the constant") {
  const auto m = matrix_of({{"a", {2.5, 2.5, 2.5}}, {"b", {2.5, 2.5}}});
  Rng rng(1);
  const auto ci = stratified_bootstrap_ci(m, mean_of, 500, 0.95, rng);
  REQUIRE(ci.low == 2.5);
  REQUIRE(ci.high == 2.5);
  REQUIRE_FALSE(ci.low_resample_warning);
}

TEST_CASE("two-run stratum matches the enumeration oracle") {
  // Resampling {x1, x2} with replacement gives four equally likely pairs whose
  // means are {x1, mid, mid, x2}; at level 0.95 the percentile interval on
  // resample atoms is exactly (x1, x2).
  const double x1 = 1.0, x2 = 3.0;
  const auto m = matrix_of({{"a", {x1, x2}}});
  Rng rng(7);
  const auto ci = stratified_bootstrap_ci(m, mean_of, 2000, 0.95, rng);
  REQUIRE(ci.low == Catch::Approx(x1).margin(1e-12));
  REQUIRE(ci.high == Catch::Approx(x2).margin(1e-12));
}

TEST_CASE("bootstrap interval brackets the point estimate") {
  ScoreMatrix m;
  Rng fill(3);
  for (const char* env : {"a", "b", "c"}) {
    auto& xs = m.scores[env];
    xs.resize(8);
    for (double& x : xs) x = fill.uniform(0.0, 1.0);
  }
  const double point = iqm(m.pooled());
  Rng rng(11);
  const auto ci = stratified_bootstrap_ci(m, [](const std::vector<double>& xs) {
    return iqm(xs);
  }, 1000, 0.95, rng);
  REQUIRE(ci.low <= point);
  REQUIRE(point <= ci.high);
  REQUIRE(ci.low <= ci.high);
}

TEST_CASE("bootstrap is deterministic in the rng seed") {
  const auto m = matrix_of({{"a", {0.1, 0.9, 0.4, 0.7}}, {"b", {0.2, 0.6}}});
  Rng r1(42), r2(42);
  const auto a = stratified_bootstrap_ci(m, mean_of, 300, 0.9, r1);
  const auto b = stratified_bootstrap_ci(m, mean_of, 300, 0.9, r2);
  REQUIRE(a.low == b.low);
  REQUIRE(a.high == b.high);
}

TEST_CASE("bootstrap flags thin resampling and rejects bad arguments") {
  const auto m = matrix_of({{"a", {1.0, 2.0}}});
  Rng rng(0);
  REQUIRE(stratified_bootstrap_ci(m, mean_of, 50, 0.95, rng).low_resample_warning);
  REQUIRE_FALSE(stratified_bootstrap_ci(m, mean_of, 100, 0.95, rng).low_resample_warning);
  REQUIRE_THROWS_AS(stratified_bootstrap_ci(m, mean_of, 0, 0.95, rng), ConfigError);
  REQUIRE_THROWS_AS(stratified_bootstrap_ci(m, mean_of, 100, 0.0, rng), ConfigError);
  REQUIRE_THROWS_AS(stratified_bootstrap_ci(m, mean_of, 100, 1.0, rng), ConfigError);
  REQUIRE_THROWS_AS(stratified_bootstrap_ci(ScoreMatrix{}, mean_of, 10, 0.9, rng),
                    UsageError);
  const auto empty_stratum = matrix_of({{"a", {}}});
  REQUIRE_THROWS_AS(stratified_bootstrap_ci(empty_stratum, mean_of, 10, 0.9, rng),
                    UsageError);
}
