#include <gtest/gtest.h>

#include <cmath>

#include "iseg/adaptive.hpp"
#include "oracles.hpp"

using namespace iseg;

namespace {

PtMap pts(std::vector<double> v) {
  const std::size_t n = v.size();
  return PtMap(1, n, std::move(v));
}

// Random map with at least one foreground pixel.
std::pair<ProbMap, BinaryMask> random_case(Rng& rng, std::size_t h = 4, std::size_t w = 4) {
  ProbMap p = oracle::random_prob(rng, h, w, 0.01, 0.99);
  BinaryMask y = oracle::random_mask(rng, h, w, 0.4);
  y.set(rng.below(h * w), 1);
  return {std::move(p), std::move(y)};
}

}  // namespace

TEST(GammaA, Examples) {
  const BinaryMask fg(1, 2, std::uint8_t{1});
  EXPECT_EQ(gamma_a(ProbMap(1, 2, 1.0), fg), 0.0);
  // The clamp floor keeps pt at eps, so the value sits just below 1.
  EXPECT_NEAR(gamma_a(ProbMap(1, 2, 0.0), fg), 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(gamma_a(ProbMap(1, 2, std::vector<double>{0.5, 1.0}), fg), 0.25);
  EXPECT_EQ(gamma_a(ProbMap(1, 2, 0.3), BinaryMask(1, 2, std::uint8_t{0})), 0.0);
}

TEST(Mu, Examples) {
  Rng rng(7, 1);
  for (int rep = 0; rep < 10; ++rep) {
    auto [p, y] = random_case(rng);
    EXPECT_DOUBLE_EQ(mu(pt_map(p, y), 0.0, rng.uniform()), 1.0);
  }
  EXPECT_NEAR(mu(PtMap(2, 2, 0.5), 2.0, 0.4), 2.2222222222, 1e-9);
  EXPECT_NEAR(mu(pt_map(ProbMap(1, 3, 0.0), BinaryMask(1, 3, std::uint8_t{1})), 2.0, 0.4),
              1.0 / 1.8, 1e-6);
  EXPECT_THROW(mu(PtMap{}, 2.0, 0.4), DimensionError);
}

TEST(Mu, AllEasyIsCapped) {
  const double m = mu(PtMap(2, 2, 1.0), 2.0, 0.4);
  EXPECT_TRUE(std::isfinite(m));
  EXPECT_DOUBLE_EQ(m, 1.0 / kMuFloor);
}

TEST(Mu, NormalizationIdentity) {
  Rng rng(8, 1);
  for (int rep = 0; rep < 100; ++rep) {
    auto [p, y] = random_case(rng, 2 + rng.below(5), 2 + rng.below(5));
    const PtMap pt = pt_map(p, y);
    const double gd = rng.uniform(0.0, 5.0) + gamma_a(pt, y);
    const double delta = rng.uniform();
    const double m = mu(pt, gd, delta);
    double mean = 0.0;
    for (double v : pt.values()) mean += m * std::pow(1.0 - v, gd) * (1.0 + delta * gd);
    EXPECT_NEAR(mean / static_cast<double>(pt.size()), 1.0, 1e-12);
    const double ga = gamma_a(pt, y);
    EXPECT_GE(ga, 0.0);
    EXPECT_LE(ga, 1.0);
  }
}

TEST(Afl, WorkedSinglePixel) {
  const auto [out, d] = afl(ProbMap(1, 1, 0.5), BinaryMask(1, 1, std::uint8_t{1}));
  EXPECT_NEAR(d.gamma_a, 0.5, 1e-15);
  EXPECT_NEAR(d.gamma_d, 2.5, 1e-15);
  EXPECT_NEAR(d.mu, 2.8284271247, 1e-9);
  EXPECT_NEAR(out.value, 0.4349619379, 1e-9);
  EXPECT_NEAR(out.grad[0], -3.3515863849, 1e-9);
  EXPECT_EQ(d.hard_count, 1u);
}

TEST(Afl, AllEasyIsZero) {
  const auto [out, d] = afl(ProbMap(2, 2, 1.0), BinaryMask(2, 2, std::uint8_t{1}));
  EXPECT_EQ(out.value, 0.0);
  for (double g : out.grad.values()) EXPECT_EQ(g, 0.0);
}

TEST(Afl, ReductionLadder) {
  Rng rng(9, 1);
  for (int rep = 0; rep < 100; ++rep) {
    auto [p, y] = random_case(rng);
    AflParams prm;
    prm.gamma = rng.uniform(0.0, 5.0);
    prm.alpha = rng.uniform(0.0, 2.0);
    prm.ada_enabled = prm.agr_enabled = false;
    auto expect_same = [](const LossOutput& a, const LossOutput& b) {
      EXPECT_NEAR(a.value, b.value, 1e-12 * std::max(1.0, std::abs(b.value)));
      for (std::size_t i = 0; i < a.grad.size(); ++i)
        EXPECT_NEAR(a.grad[i], b.grad[i], 1e-12 * std::max(1.0, std::abs(b.grad[i])));
    };
    expect_same(afl(p, y, prm).first, poly(p, y, prm.gamma, prm.alpha));
    prm.alpha = 0.0;
    expect_same(afl(p, y, prm).first, focal(p, y, prm.gamma));
    prm.gamma = 0.0;
    expect_same(afl(p, y, prm).first, bce(p, y));
  }
}

TEST(Afl, ParameterErrors) {
  const ProbMap p(1, 1, 0.5);
  const BinaryMask y(1, 1, std::uint8_t{1});
  AflParams prm;
  prm.delta = 1.5;
  EXPECT_THROW(afl(p, y, prm), ParameterError);
  prm = {};
  prm.alpha = -1.0;
  EXPECT_THROW(afl(p, y, prm), ParameterError);
  prm = {};
  prm.gamma = 6.0;
  EXPECT_THROW(afl(p, y, prm), ParameterError);
  EXPECT_THROW(afl(p, BinaryMask(1, 2, std::uint8_t{1})), DimensionError);
}

TEST(Series, BceExamples) {
  EXPECT_DOUBLE_EQ(bce_grad_series(pts({1.0}), 1)[0], 1.0);
  EXPECT_NEAR(bce_grad_series(pts({0.8}), 50)[0], 1.25, 1e-12);
  const Field one = bce_grad_series(pts({0.55, 0.7, 0.99}), 1);
  for (double v : one.values()) EXPECT_EQ(v, 1.0);
  EXPECT_THROW(bce_grad_series(pts({0.5}), 10), DomainError);
  EXPECT_THROW(bce_grad_series(pts({0.9}), 0), ParameterError);
}

TEST(Series, AflExamples) {
  EXPECT_EQ(afl_grad_series(pts({1.0}), 2.5, 1.0, 10)[0], 0.0);
  EXPECT_NEAR(afl_grad_series(pts({0.9}), 2.0, 1.0, 1)[0], 0.06, 1e-15);
  for (double pt = 0.6; pt <= 0.99 + 1e-12; pt += 0.03)
    EXPECT_NEAR(afl_grad_series(pts({pt}), 0.0, 0.0, 200)[0], 1.0 / pt, 1e-6);
  EXPECT_THROW(afl_grad_series(pts({0.4}), 2.0, 1.0, 5), DomainError);
}

TEST(Series, AflMatchesExactGradientWithUnitMu) {
  for (double gd : {0.0, 0.7, 2.5}) {
    for (double alpha : {0.0, 1.0}) {
      for (double pt : {0.6, 0.8, 0.95}) {
        const LossOutput exact = afl_with_coefficients(ProbMap(1, 1, pt), BinaryMask(1, 1, std::uint8_t{1}),
                                                       gd, 1.0, alpha);
        EXPECT_NEAR(afl_grad_series(pts({pt}), gd, alpha, 200)[0], -exact.grad[0], 1e-9)
            << gd << " " << alpha << " " << pt;
      }
    }
  }
}

TEST(Decomposition, Examples) {
  const PtMap pt = pts({0.6, 0.75, 0.9});
  const GradientDecomposition d0 = gradient_decomposition(pt, 0.0, 0.7, 0.4, 20);
  for (std::size_t i = 0; i < pt.size(); ++i) {
    EXPECT_DOUBLE_EQ(d0.nabla_b[i], 0.7);
    EXPECT_DOUBLE_EQ(d0.mixed[i], d0.nu[i]);
  }
  const GradientDecomposition dz = gradient_decomposition(pt, 2.0, 1.0, 0.0, 20);
  for (std::size_t i = 0; i < pt.size(); ++i) EXPECT_EQ(dz.mixed[i], dz.nu[i]);

  const double gd = 2.3, alpha = 0.8;
  const GradientDecomposition d = gradient_decomposition(pt, gd, alpha, 0.4, 30);
  const Field s = afl_grad_series(pt, gd, alpha, 30);
  for (std::size_t i = 0; i < pt.size(); ++i)
    EXPECT_NEAR(std::pow(1.0 - pt[i], gd) * (d.nu[i] + d.nabla_b[i]), s[i], 1e-12);
  EXPECT_THROW(gradient_decomposition(pt, gd, alpha, 0.4, 1), ParameterError);
}

TEST(Chebyshev, Examples) {
  EXPECT_EQ(chebyshev_identity_check(PtMap(3, 3, 0.37), 2.2), 0.0);
  EXPECT_DOUBLE_EQ(chebyshev_identity_check(pts({0.5, 1.0}), 2.0), 0.125);
  EXPECT_EQ(chebyshev_identity_check(pts({0.3}), 2.0), 0.0);
}

TEST(Chebyshev, MatchesDirectFormula) {
  Rng rng(10, 1);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> v(7);
    for (double& x : v) x = rng.uniform(0.05, 1.0);
    const double gd = rng.uniform(0.0, 4.0);
    double sab = 0.0, sa = 0.0, sb = 0.0;
    for (double x : v) {
      const double a = std::pow(1.0 - x, gd), b = 1.0 / x;
      sab += a * b;
      sa += a;
      sb += b;
    }
    EXPECT_NEAR(chebyshev_identity_check(pts(v), gd), std::abs(sab - sa * sb / 7.0), 1e-10);
  }
}

TEST(HardEasyReweighting, RatioNonDecreasingInGammaD) {
  std::vector<double> grid;
  for (int k = 1; k <= 9; ++k) grid.push_back(k / 10.0);
  for (std::size_t h = 0; h < grid.size(); ++h)
    for (std::size_t e = h + 1; e < grid.size(); ++e) {
      double prev = 0.0;
      for (double gd = 0.0; gd <= 3.0 + 1e-12; gd += 0.5) {
        auto ell = [gd](double pt) { return -std::pow(1.0 - pt, gd) * std::log(pt); };
        const double ratio = ell(grid[h]) / ell(grid[e]);
        EXPECT_GE(ratio, prev * (1.0 - 1e-12));
        prev = ratio;
      }
    }
}
