#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "iseg/matching.hpp"
#include "oracles.hpp"

using namespace iseg;

namespace {

CostMatrix matrix(std::size_t r, std::size_t c, std::vector<double> v) { return {r, c, std::move(v)}; }

}  // namespace

TEST(Hungarian, Examples) {
  const MatchResult diag = hungarian(matrix(3, 3, {0, 1, 1, 1, 0, 1, 1, 1, 0}));
  EXPECT_EQ(diag.total_cost, 0.0);
  ASSERT_EQ(diag.assignment.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(diag.assignment[i], std::make_pair(i, i));

  const MatchResult small = hungarian(matrix(2, 2, {1, 2, 3, 1}));
  EXPECT_EQ(small.total_cost, 2.0);
  EXPECT_EQ(small.assignment[0], std::make_pair(std::size_t{0}, std::size_t{0}));
  EXPECT_EQ(small.assignment[1], std::make_pair(std::size_t{1}, std::size_t{1}));

  const MatchResult flat = hungarian(matrix(4, 4, std::vector<double>(16, 3.5)));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(flat.assignment[i], std::make_pair(i, i));
}

TEST(Hungarian, RectangularTieBreak) {
  // More predictions than ground truths: later predictions stay unmatched.
  const MatchResult tall = hungarian(matrix(3, 1, {1, 1, 1}));
  ASSERT_EQ(tall.assignment.size(), 1u);
  EXPECT_EQ(tall.assignment[0].first, 0u);
  EXPECT_EQ(tall.unmatched_predictions, (std::vector<std::size_t>{1, 2}));

  const MatchResult wide = hungarian(matrix(1, 3, {2, 1, 1}));
  EXPECT_EQ(wide.assignment[0].second, 1u);
  EXPECT_TRUE(wide.unmatched_predictions.empty());
}

TEST(Hungarian, Errors) {
  EXPECT_THROW(hungarian(matrix(2, 2, {1, NAN, 0, 0})), ParameterError);
  EXPECT_THROW(hungarian(matrix(1, 1, {INFINITY})), ParameterError);
  EXPECT_THROW(hungarian(matrix(0, 2, {})), DimensionError);
  EXPECT_THROW(hungarian(matrix(2, 2, {1, 2, 3})), DimensionError);
}

TEST(Hungarian, BruteForceOracle) {
  Rng rng(Seed{77}, Stream::matching);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + rng.below(6), m = 1 + rng.below(6);
    std::vector<double> v(n * m);
    // Small integer costs produce many ties.
    for (double& x : v) x = rep % 2 ? static_cast<double>(rng.below(4)) : rng.uniform(0.0, 10.0);
    const MatchResult r = hungarian(matrix(n, m, v));
    const double best = oracle::brute_force_assignment(v, n, m);
    EXPECT_NEAR(r.total_cost, best, 1e-9);
    EXPECT_EQ(r.assignment.size(), std::min(n, m));
    EXPECT_EQ(r.assignment.size() + r.unmatched_predictions.size(), n);
    std::vector<int> used(m, 0);
    for (auto [i, j] : r.assignment) EXPECT_EQ(used[j]++, 0);
    EXPECT_EQ(r.assignment, hungarian(matrix(n, m, v)).assignment);
  }
}

TEST(PairCost, Examples) {
  const BinaryMask gt(3, 3, std::vector<std::uint8_t>{0, 1, 0, 1, 1, 1, 0, 1, 0});
  InstancePrediction perfect{to_prob(gt), {1.0, 0.0}};
  EXPECT_NEAR(pair_cost(perfect, {gt, ClickClass::object}), 0.0, 1e-12);
  InstancePrediction unsure{to_prob(gt), {0.5, 0.5}};
  EXPECT_NEAR(pair_cost(unsure, {gt, ClickClass::object}), 2.0 * std::numbers::ln2, 1e-9);
}

TEST(TotalLoss, Examples) {
  const BinaryMask gt(2, 2, std::vector<std::uint8_t>{1, 0, 0, 0});
  const TotalLoss perfect = total_loss({{to_prob(gt), {1.0, 0.0}}}, {{gt, ClickClass::object}});
  EXPECT_NEAR(perfect.total, 0.0, 1e-12);

  const ProbMap any(2, 2, 0.3);
  EXPECT_NEAR(total_loss({{any, {0.0, 1.0}}}, {}).total, 0.0, 1e-12);
  const TotalLoss half = total_loss({{any, {0.5, 0.5}}}, {});
  EXPECT_NEAR(half.total, 0.1 * 2.0 * std::numbers::ln2, 1e-9);
  EXPECT_EQ(half.match.unmatched_predictions, std::vector<std::size_t>{0});
}

TEST(TotalLoss, BreakdownSumsToTotal) {
  Rng rng(21, 1);
  std::vector<InstancePrediction> preds;
  std::vector<GroundTruthInstance> gts;
  for (int i = 0; i < 4; ++i) {
    const double c = rng.uniform(0.05, 0.95);
    preds.push_back({oracle::random_prob(rng, 3, 3, 0.01, 0.99), {c, 1.0 - c}});
  }
  for (int j = 0; j < 2; ++j) gts.push_back({oracle::random_mask(rng, 3, 3), ClickClass::object});
  const TotalLoss t = total_loss(preds, gts);
  EXPECT_NEAR(t.total, t.mask_term + t.click_term + t.unclick_term, 1e-12);
  EXPECT_EQ(t.pairs.size(), 2u);
  EXPECT_EQ(t.match.unmatched_predictions.size(), 2u);
  EXPECT_GT(t.unclick_term, 0.0);
}

TEST(TotalLoss, Validation) {
  const ProbMap p(2, 2, 0.5);
  EXPECT_THROW(total_loss({}, {}), DimensionError);
  EXPECT_THROW(total_loss({{p, {0.7, 0.7}}}, {}), ParameterError);
  EXPECT_THROW(total_loss({{p, {0.5, 0.5}}}, {{BinaryMask(3, 3, std::uint8_t{0}), ClickClass::object}}),
               DimensionError);
  LossWeights w;
  w.lambda_cli = -1.0;
  EXPECT_THROW(total_loss({{p, {0.5, 0.5}}}, {}, w), ParameterError);
}

TEST(GroundTruthInstance, OneHot) {
  const BinaryMask m(1, 1, std::uint8_t{1});
  EXPECT_EQ(GroundTruthInstance::from_one_hot(m, {0, 1}).click_class, ClickClass::unclick);
  EXPECT_EQ((GroundTruthInstance{m, ClickClass::object}.one_hot()), (std::array<int, 2>{1, 0}));
  EXPECT_THROW(GroundTruthInstance::from_one_hot(m, {1, 1}), ParameterError);
}
