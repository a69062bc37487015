#include <gtest/gtest.h>

#include "iseg/clicksim.hpp"
#include "oracles.hpp"

using namespace iseg;

namespace {

BinaryMask square(std::size_t n, std::size_t top, std::size_t left, std::size_t side) {
  BinaryMask m(n, n, std::uint8_t{0});
  for (std::size_t r = top; r < top + side; ++r)
    for (std::size_t c = left; c < left + side; ++c) m.set(r * n + c, 1);
  return m;
}

NocSample sample_of(const BinaryMask& gt) { return {{Field(gt.height(), gt.width(), 0.0)}, gt}; }

}  // namespace

TEST(EncodeClicks, Examples) {
  const ClickMaps none = encode_clicks({}, 4, 4);
  for (double v : none.positive.values()) EXPECT_EQ(v, 0.0);
  for (double v : none.negative.values()) EXPECT_EQ(v, 0.0);

  const std::vector<ClickRecord> one = {{1, 2, true, 1}};
  const ClickMaps single = encode_clicks(one, 4, 4, 1.0);
  EXPECT_EQ(count_ones(binarize(single.positive)), 1u);
  EXPECT_EQ(single.positive.at(1, 2), 1.0);

  const std::vector<ClickRecord> two = {{3, 3, true, 1}, {3, 4, true, 2}};
  const ClickMaps u = encode_clicks(two, 8, 8, 2.0);
  for (double v : u.positive.values()) EXPECT_TRUE(v == 0.0 || v == 1.0);
  EXPECT_EQ(count_ones(binarize(u.positive)), 12u);

  const std::vector<ClickRecord> bad = {{4, 0, false, 1}};
  EXPECT_THROW(encode_clicks(bad, 4, 4), ParameterError);
}

TEST(NextClick, CentreOfSquare) {
  const BinaryMask gt = square(11, 3, 3, 5);
  const ClickRecord c = next_click(BinaryMask(11, 11, std::uint8_t{0}), gt);
  EXPECT_EQ(c.row, 5u);
  EXPECT_EQ(c.col, 5u);
  EXPECT_TRUE(c.positive);
  EXPECT_EQ(c.index, 1u);
}

TEST(NextClick, ExtraPixelGetsNegativeClick) {
  const BinaryMask gt = square(9, 2, 2, 3);
  BinaryMask pred = gt;
  pred.set(8 * 9 + 8, 1);
  const ClickRecord c = next_click(pred, gt);
  EXPECT_EQ(c.row, 8u);
  EXPECT_EQ(c.col, 8u);
  EXPECT_FALSE(c.positive);
}

TEST(NextClick, EqualRegionsPreferFalseNegative) {
  BinaryMask gt(5, 5, std::uint8_t{0}), pred(5, 5, std::uint8_t{0});
  pred.set(0, 1);       // false positive at (0, 0)
  gt.set(4 * 5 + 4, 1);  // false negative at (4, 4)
  const ClickRecord c = next_click(pred, gt);
  EXPECT_TRUE(c.positive);
  EXPECT_EQ(c.row, 4u);
}

TEST(NextClick, NoErrorSignalled) {
  const BinaryMask gt = square(5, 1, 1, 2);
  EXPECT_THROW(next_click(gt, gt), NoErrorRegion);
}

TEST(NextClick, SkipsPreviouslyClickedPixels) {
  const BinaryMask gt = square(7, 2, 2, 3);
  const BinaryMask empty(7, 7, std::uint8_t{0});
  const ClickRecord first = next_click(empty, gt);
  const std::vector<ClickRecord> prior = {first};
  const ClickRecord second = next_click(empty, gt, prior);
  EXPECT_NE(first.row * 7 + first.col, second.row * 7 + second.col);
  EXPECT_EQ(second.index, 2u);
}

TEST(ChessboardDistance, MatchesBruteForce) {
  Rng rng(41, 1);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t h = 3 + rng.below(6), w = 3 + rng.below(6);
    const BinaryMask m = oracle::random_mask(rng, h, w, 0.7);
    std::vector<std::uint8_t> region(m.values().begin(), m.values().end());
    const auto d = chessboard_distance(region, h, w);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        if (!region[r * w + c]) {
          EXPECT_EQ(d[r * w + c], 0u);
          continue;
        }
        // Distance to the nearest outside pixel, including the virtual border.
        long best = static_cast<long>(std::min({r + 1, c + 1, h - r, w - c}));
        for (std::size_t rr = 0; rr < h; ++rr)
          for (std::size_t cc = 0; cc < w; ++cc)
            if (!region[rr * w + cc])
              best = std::min(best, std::max(std::labs(static_cast<long>(rr) - static_cast<long>(r)),
                                             std::labs(static_cast<long>(cc) - static_cast<long>(c))));
        EXPECT_EQ(static_cast<long>(d[r * w + c]), best);
      }
  }
}

TEST(RunNoc, OracleAndConstant) {
  const BinaryMask gt = square(16, 4, 5, 6);
  const SimTrace o = run_noc(make_oracle(), sample_of(gt));
  EXPECT_EQ(o.noc85, 1u);
  EXPECT_EQ(o.noc90, 1u);
  EXPECT_FALSE(o.failed90);
  EXPECT_EQ(o.clicks.size(), 1u);

  const SimTrace c = run_noc(make_constant(0.1), sample_of(gt));
  EXPECT_EQ(c.noc85, 20u);
  EXPECT_EQ(c.noc90, 20u);
  EXPECT_TRUE(c.failed85);
  EXPECT_TRUE(c.failed90);
  EXPECT_EQ(c.ious.size(), 20u);
}

TEST(RunNoc, NoisyOracleIsDeterministicAndOrdered) {
  const BinaryMask gt = square(24, 5, 6, 10);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SimTrace a = run_noc(make_noisy_oracle(0.3, Seed{seed}), sample_of(gt));
    const SimTrace b = run_noc(make_noisy_oracle(0.3, Seed{seed}), sample_of(gt));
    EXPECT_EQ(a.clicks, b.clicks);
    EXPECT_EQ(a.ious, b.ious);
    EXPECT_LE(a.noc85, a.noc90);
  }
}

TEST(RunNoc, Errors) {
  const BinaryMask gt = square(8, 2, 2, 3);
  EXPECT_THROW(run_noc(make_oracle(), sample_of(BinaryMask(8, 8, std::uint8_t{0}))), ParameterError);
  const Predictor broken = [](const NocSample&, std::span<const ClickRecord>) -> ProbMap {
    throw std::runtime_error("boom");
  };
  try {
    run_noc(broken, sample_of(gt));
    FAIL();
  } catch (const PredictorError& e) {
    EXPECT_EQ(e.click_index, 1u);
  }
}

TEST(MiouAtK, Examples) {
  SimTrace t;
  t.ious = {0.5, 0.9};
  const std::vector<SimTrace> one = {t};
  EXPECT_EQ(miou_at_k(one, 1), 0.5);
  EXPECT_EQ(miou_at_k(one, 2), 0.9);
  EXPECT_EQ(miou_at_k(one, 7), 0.9);
  EXPECT_THROW(miou_at_k(std::vector<SimTrace>{}, 1), ParameterError);

  const BinaryMask gt = square(10, 2, 2, 4);
  const std::vector<SimTrace> oracle = {run_noc(make_oracle(), sample_of(gt))};
  const NocSummary s = summarize(oracle);
  ASSERT_EQ(s.miou.size(), 20u);
  for (double v : s.miou) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(s.mean_noc90, 1.0);
}
