#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "streamrl/objectives.hpp"

using namespace streamrl;

namespace {

// Independent O(K^2) projection oracle: each target mass lands on the hat
// function max(0, 1 - |Tz_j - z_i|/dz) around every output atom.
CategoricalDistribution project_oracle(const CategoricalDistribution& src, double reward,
                                       double discount, bool terminal) {
  const auto& z = src.atoms;
  const double dz = src.spacing();
  CategoricalDistribution out;
  out.atoms = z;
  out.probs.assign(z.size(), 0.0);
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double tz =
        clip(reward + (terminal ? 0.0 : discount * z[j]), z.front(), z.back());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double w = 1.0 - std::abs(tz - z[i]) / dz;
      if (w > 0.0) out.probs[i] += src.probs[j] * w;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("mse values and unboundedness") {
  const auto zero = mse(1.0, 1.0);
  REQUIRE(zero.loss == 0.0);
  REQUIRE(zero.grad[0] == 0.0);
  const auto two = mse(0.0, 2.0);
  REQUIRE(two.loss == 4.0);
  REQUIRE(two.grad[0] == -4.0);
  // witness: gradient exceeds any fixed bound
  REQUIRE(std::abs(mse(0.0, 1e12).grad[0]) == 2e12);
}

TEST_CASE("smooth_l1 branches") {
  const auto quad = smooth_l1(0.0, 0.5, 1.0);
  REQUIRE(quad.loss == Catch::Approx(0.125).margin(1e-15));
  REQUIRE(quad.grad[0] == Catch::Approx(-0.5).margin(1e-15));
  const auto lin = smooth_l1(0.0, 2.0, 1.0);
  REQUIRE(lin.loss == Catch::Approx(1.5).margin(1e-15));
  REQUIRE(lin.grad[0] == -1.0);
  const auto none = smooth_l1(3.0, 3.0, 1.0);
  REQUIRE(none.loss == 0.0);
  REQUIRE(none.grad[0] == 0.0);
  REQUIRE_THROWS_AS(smooth_l1(0.0, 1.0, 0.0), ConfigError);
}

TEST_CASE("smooth_l1 gradient bounded under adversarial magnitudes") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double target = rng.uniform(-1e12, 1e12);
    const double pred = rng.uniform(-1e12, 1e12);
    const auto lg = smooth_l1(pred, target, 1.0);
    REQUIRE(std::abs(lg.grad[0]) <= 1.0);
    REQUIRE(std::isfinite(lg.loss));
  }
}

TEST_CASE("td_error_control arithmetic") {
  REQUIRE(td_error_control(0.0, 0.0, 1.0, 0.99, false) == 1.0);
  REQUIRE(td_error_control(3.0, 100.0, 0.0, 0.99, true) == -3.0);
  REQUIRE(td_error_control(2.0, 2.0, 0.0, 1.0, false) == 0.0);
}

TEST_CASE("uniform atom grid endpoints and spacing") {
  const auto atoms = uniform_atom_grid(-10.0, 10.0, 51);
  REQUIRE(atoms.front() == -10.0);
  REQUIRE(atoms.back() == 10.0);
  for (std::size_t i = 1; i < atoms.size(); ++i)
    REQUIRE(atoms[i] - atoms[i - 1] == Catch::Approx(0.4).margin(1e-12));
  REQUIRE_THROWS_AS(uniform_atom_grid(1.0, 1.0, 5), ConfigError);
  REQUIRE_THROWS_AS(uniform_atom_grid(-1.0, 1.0, 1), ConfigError);
}

TEST_CASE("softmax stability and shift invariance") {
  const auto p = softmax({1e12, -1e12, 0.0});
  REQUIRE(std::isfinite(p[0]));
  REQUIRE(p[0] == Catch::Approx(1.0));
  const auto a = softmax({1.0, 2.0, 3.0});
  const auto b = softmax({101.0, 102.0, 103.0});
  for (int i = 0; i < 3; ++i) REQUIRE(a[i] == Catch::Approx(b[i]).margin(1e-12));
  double sum = 0.0;
  for (double v : a) sum += v;
  REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("c51_project identity map on the grid") {
  CategoricalDistribution src;
  src.atoms = uniform_atom_grid(-10.0, 10.0, 21);
  src.probs.assign(21, 0.0);
  src.probs[3] = 0.25;
  src.probs[10] = 0.5;
  src.probs[20] = 0.25;
  const auto out = c51_project(src, 0.0, 1.0, false);
  for (int i = 0; i < 21; ++i) REQUIRE(out.probs[i] == src.probs[i]);
}

TEST_CASE("c51_project two-hot split, terminal") {
  CategoricalDistribution src;
  src.atoms = {-1.0, 0.0, 1.0};
  src.probs = {0.0, 1.0, 0.0};
  const auto out = c51_project(src, 0.5, 0.99, true);
  REQUIRE(out.probs[0] == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(out.probs[1] == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(out.probs[2] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("c51_project against brute-force oracle, mass and mean") {
  Rng rng(99);
  for (int trial = 0; trial < 400; ++trial) {
    CategoricalDistribution src;
    const int k = 2 + rng.below_int(30);
    src.atoms = uniform_atom_grid(-10.0, 10.0, k);
    src.probs.resize(k);
    double total = 0.0;
    for (double& p : src.probs) total += (p = rng.uniform());
    for (double& p : src.probs) p /= total;
    const double reward = rng.uniform(-12.0, 12.0);
    const double discount = rng.uniform();
    const bool terminal = rng.bernoulli(0.1);

    const auto fast = c51_project(src, reward, discount, terminal);
    const auto slow = project_oracle(src, reward, discount, terminal);
    double mass = 0.0;
    for (int i = 0; i < k; ++i) {
      REQUIRE(fast.probs[i] >= 0.0);
      REQUIRE(fast.probs[i] == Catch::Approx(slow.probs[i]).margin(1e-12));
      mass += fast.probs[i];
    }
    REQUIRE(mass == Catch::Approx(1.0).margin(1e-12));

    // projected mean within one atom spacing of the clipped Bellman mean,
    // provided the source pushforward stays in the interior
    const double want =
        clip(reward + (terminal ? 0.0 : discount * src.mean()), -10.0, 10.0);
    bool interior = true;
    for (int j = 0; j < k; ++j) {
      const double tz = reward + (terminal ? 0.0 : discount * src.atoms[j]);
      if ((tz < -10.0 || tz > 10.0) && src.probs[j] > 0.0) interior = false;
    }
    if (interior) REQUIRE(std::abs(fast.mean() - want) <= src.spacing());
  }
}

TEST_CASE("c51_cross_entropy gradient structure") {
  CategoricalDistribution target;
  target.atoms = uniform_atom_grid(-1.0, 1.0, 5);
  target.probs = {0.2, 0.2, 0.2, 0.2, 0.2};
  const auto even = c51_cross_entropy({0.0, 0.0, 0.0, 0.0, 0.0}, target);
  for (double g : even.grad) REQUIRE(g == Catch::Approx(0.0).margin(1e-15));

  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> logits(5);
    for (double& l : logits) l = rng.uniform(-1e12, 1e12);
    std::vector<double> m(5);
    double tot = 0.0;
    for (double& p : m) tot += (p = rng.uniform());
    for (double& p : m) p /= tot;
    target.probs = m;
    const auto lg = c51_cross_entropy(logits, target);
    double gsum = 0.0;
    for (double g : lg.grad) {
      REQUIRE(std::abs(g) <= 1.0);
      gsum += g;
    }
    REQUIRE(gsum == Catch::Approx(0.0).margin(1e-9));
  }

  target.probs = {1.0, 0.0, 0.0, 0.0, 0.0};
  const auto matched = c51_cross_entropy({60.0, -60.0, -60.0, -60.0, -60.0}, target);
  REQUIRE(matched.loss == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("c51_cross_entropy grad matches finite differences of its loss") {
  CategoricalDistribution target;
  target.atoms = uniform_atom_grid(-1.0, 1.0, 4);
  target.probs = {0.1, 0.4, 0.3, 0.2};
  std::vector<double> logits{0.3, -0.7, 1.2, 0.0};
  const auto lg = c51_cross_entropy(logits, target);
  const double h = 1e-6;
  for (int i = 0; i < 4; ++i) {
    auto up = logits, dn = logits;
    up[i] += h;
    dn[i] -= h;
    const double fd =
        (c51_cross_entropy(up, target).loss - c51_cross_entropy(dn, target).loss) /
        (2.0 * h);
    REQUIRE(lg.grad[i] == Catch::Approx(fd).margin(1e-8));
  }
}

TEST_CASE("quantile_huber hand-derived cases") {
  const auto zero = quantile_huber({1.0}, {1.0}, 1.0);
  REQUIRE(zero.loss == 0.0);
  REQUIRE(zero.grad[0] == 0.0);

  // target above both estimates by more than kappa: grads are (-tau_1, -tau_2)
  const auto above = quantile_huber({0.0, 0.0}, {5.0}, 1.0);
  REQUIRE(above.grad[0] == Catch::Approx(-0.25).margin(1e-15));
  REQUIRE(above.grad[1] == Catch::Approx(-0.75).margin(1e-15));

  REQUIRE_THROWS_AS(quantile_huber({0.0}, {1.0}, 0.0), ConfigError);
  REQUIRE_THROWS_AS(quantile_huber({}, {1.0}, 1.0), UsageError);
}

TEST_CASE("quantile_huber gradient bounded under adversarial magnitudes") {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + rng.below_int(8);
    const int m = 1 + rng.below_int(8);
    std::vector<double> est(n), tgt(m);
    for (double& v : est) v = rng.uniform(-1e12, 1e12);
    for (double& v : tgt) v = rng.uniform(-1e12, 1e12);
    const auto lg = quantile_huber(est, tgt, 1.0);
    for (double g : lg.grad) REQUIRE(std::abs(g) <= 1.0);
  }
}

TEST_CASE("quantile_huber grad matches finite differences") {
  std::vector<double> est{0.2, -0.5, 1.0};
  std::vector<double> tgt{0.9, -1.1};
  const auto lg = quantile_huber(est, tgt, 1.0);
  const double h = 1e-6;
  for (std::size_t i = 0; i < est.size(); ++i) {
    auto up = est, dn = est;
    up[i] += h;
    dn[i] -= h;
    const double fd =
        (quantile_huber(up, tgt, 1.0).loss - quantile_huber(dn, tgt, 1.0).loss) / (2.0 * h);
    REQUIRE(lg.grad[i] == Catch::Approx(fd).margin(1e-8));
  }
}
