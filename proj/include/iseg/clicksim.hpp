// Automated click simulation and the NoC / mIoU@k metrics.
//
// Protocol (pinned by kProtocolVersion):
//   * error regions are 4-connected components of false negatives and false
//     positives, taken separately;
//   * the largest region wins; ties prefer false negatives, then the region
//     whose first pixel (row-major) comes first;
//   * the click lands on the region pixel farthest from the region boundary
//     in chessboard (Chebyshev) distance, outside-image counting as boundary;
//     ties go to the smallest (row, col); pixels clicked before are skipped
//     while any other pixel of the region remains;
//   * the first click is the same rule applied to an empty prediction;
//   * predictions are binarized at 0.5; a threshold's NoC is the first click
//     count reaching it, or max_clicks with a failure flag.
#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "iseg/clicks.hpp"
#include "iseg/core.hpp"
#include "iseg/synthgen.hpp"

namespace iseg {

inline constexpr const char* kProtocolVersion = "noc-1";
inline constexpr std::size_t kMaxClicks = 20;

/// Prediction already equals the ground truth; no click can be placed.
class NoErrorRegion : public Error {
 public:
  using Error::Error;
};

/// A predictor threw while answering click `click_index`.
class PredictorError : public Error {
 public:
  PredictorError(std::size_t click_index, const std::string& what)
      : Error("predictor failed at click " + std::to_string(click_index) + ": " + what),
        click_index(click_index) {}
  std::size_t click_index;
};

struct NocSample {
  std::vector<Field> features;  // per-pixel input channels
  BinaryMask gt;
};

/// Maps (sample, clicks so far) to a probability map of the target.
using Predictor = std::function<ProbMap(const NocSample&, std::span<const ClickRecord>)>;

struct SimTrace {
  std::vector<ClickRecord> clicks;
  std::vector<double> ious;
  std::size_t noc85 = kMaxClicks;
  std::size_t noc90 = kMaxClicks;
  bool failed85 = true;
  bool failed90 = true;
};

// ---------------------------------------------------------------------------

namespace detail {

struct Component {
  std::vector<std::size_t> pixels;  // row-major indices, ascending
  bool false_negative = true;
};

// 4-connected components of `mask`, each with sorted pixel list.
inline std::vector<Component> components(const std::vector<std::uint8_t>& mask, std::size_t h,
                                         std::size_t w, bool false_negative) {
  std::vector<Component> out;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    Component comp{{}, false_negative};
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      comp.pixels.push_back(i);
      const std::size_t r = i / w, c = i % w;
      const std::size_t nb[4] = {r > 0 ? i - w : i, r + 1 < h ? i + w : i, c > 0 ? i - 1 : i,
                                 c + 1 < w ? i + 1 : i};
      for (std::size_t j : nb)
        if (j != i && mask[j] && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace detail

/// Chessboard distance from each pixel of `region` to the nearest pixel
/// outside it (pixels beyond the image border count as outside). Zero off
/// the region. Two-pass chamfer with unit 8-neighbour weights, which is exact
/// for this metric.
inline std::vector<std::size_t> chessboard_distance(const std::vector<std::uint8_t>& region,
                                                    std::size_t h, std::size_t w) {
  const std::size_t big = h + w + 2;
  std::vector<std::size_t> d(h * w);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = region[i] ? big : 0;
  auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) -> std::size_t {
    if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(h) || c >= static_cast<std::ptrdiff_t>(w))
      return 0;
    return d[static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c)];
  };
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(h); ++r)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(w); ++c) {
      auto& v = d[static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c)];
      if (!v) continue;
      v = std::min({v, at(r - 1, c - 1) + 1, at(r - 1, c) + 1, at(r - 1, c + 1) + 1, at(r, c - 1) + 1});
    }
  for (std::ptrdiff_t r = static_cast<std::ptrdiff_t>(h) - 1; r >= 0; --r)
    for (std::ptrdiff_t c = static_cast<std::ptrdiff_t>(w) - 1; c >= 0; --c) {
      auto& v = d[static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c)];
      if (!v) continue;
      v = std::min({v, at(r + 1, c + 1) + 1, at(r + 1, c) + 1, at(r + 1, c - 1) + 1, at(r, c + 1) + 1});
    }
  return d;
}

inline ClickRecord next_click(const BinaryMask& pred, const BinaryMask& gt,
                              std::span<const ClickRecord> prior = {}) {
  require_same_shape(pred, gt, "next_click");
  const std::size_t h = gt.height(), w = gt.width();
  std::vector<std::uint8_t> fn(gt.size()), fp(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    fn[i] = gt[i] && !pred[i];
    fp[i] = pred[i] && !gt[i];
  }
  auto comps = detail::components(fn, h, w, true);
  auto fp_comps = detail::components(fp, h, w, false);
  comps.insert(comps.end(), std::make_move_iterator(fp_comps.begin()),
               std::make_move_iterator(fp_comps.end()));
  if (comps.empty()) throw NoErrorRegion("next_click: prediction equals ground truth");

  const auto best = std::min_element(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
    if (a.pixels.size() != b.pixels.size()) return a.pixels.size() > b.pixels.size();
    if (a.false_negative != b.false_negative) return a.false_negative;
    return a.pixels.front() < b.pixels.front();
  });

  std::vector<std::uint8_t> region(gt.size(), 0);
  for (std::size_t i : best->pixels) region[i] = 1;
  const auto dist = chessboard_distance(region, h, w);

  auto clicked = [&](std::size_t i) {
    return std::any_of(prior.begin(), prior.end(),
                       [&](const ClickRecord& c) { return c.row * w + c.col == i; });
  };
  std::size_t chosen = best->pixels.front();
  std::size_t chosen_d = 0;
  bool chosen_fresh = false;
  for (std::size_t i : best->pixels) {  // ascending row-major, so strict > keeps the smallest
    const bool fresh = !clicked(i);
    if ((fresh && !chosen_fresh) || (fresh == chosen_fresh && dist[i] > chosen_d)) {
      chosen = i;
      chosen_d = dist[i];
      chosen_fresh = fresh;
    }
  }
  return {chosen / w, chosen % w, best->false_negative, prior.size() + 1};
}

/// Runs up to `max_clicks` clicks, stopping once the higher threshold is met.
inline SimTrace run_noc(const Predictor& predictor, const NocSample& sample,
                        std::size_t max_clicks = kMaxClicks, double thr_low = 0.85,
                        double thr_high = 0.90) {
  require(max_clicks >= 1, "run_noc: max_clicks must be >= 1");
  require(thr_low > 0.0 && thr_low <= thr_high && thr_high <= 1.0,
          "run_noc: thresholds must satisfy 0 < low <= high <= 1");
  if (count_ones(sample.gt) == 0) throw ParameterError("run_noc: ground truth is empty");

  SimTrace t;
  t.noc85 = t.noc90 = max_clicks;
  BinaryMask current(sample.gt.height(), sample.gt.width(), std::uint8_t{0});
  for (std::size_t k = 1; k <= max_clicks; ++k) {
    t.clicks.push_back(next_click(current, sample.gt, t.clicks));
    ProbMap prob;
    try {
      prob = predictor(sample, t.clicks);
    } catch (const std::exception& e) {
      throw PredictorError(k, e.what());
    }
    require_same_shape(prob, sample.gt, "run_noc: predictor output");
    current = binarize(prob, 0.5);
    const double v = iou(current, sample.gt);
    t.ious.push_back(v);
    if (t.failed85 && v >= thr_low) {
      t.noc85 = k;
      t.failed85 = false;
    }
    if (t.failed90 && v >= thr_high) {
      t.noc90 = k;
      t.failed90 = false;
    }
    if (!t.failed90) break;
  }
  return t;
}

/// Mean IoU after k clicks; shorter traces carry their final IoU forward.
inline double miou_at_k(std::span<const SimTrace> traces, std::size_t k) {
  if (traces.empty()) throw ParameterError("miou_at_k: no traces");
  require(k >= 1 && k <= kMaxClicks, "miou_at_k: k must lie in [1, 20]");
  double acc = 0.0;
  for (const auto& t : traces) {
    if (t.ious.empty()) throw ParameterError("miou_at_k: trace without clicks");
    acc += t.ious[std::min(k, t.ious.size()) - 1];
  }
  return acc / static_cast<double>(traces.size());
}

struct NocSummary {
  std::size_t samples = 0;
  double mean_noc85 = 0.0;
  double mean_noc90 = 0.0;
  std::size_t failures85 = 0;
  std::size_t failures90 = 0;
  std::vector<double> miou;  // miou[k - 1] = mIoU@k, k = 1..20
};

/// Failed traces count with their capped NoC.
inline NocSummary summarize(std::span<const SimTrace> traces) {
  NocSummary s;
  s.samples = traces.size();
  if (traces.empty()) return s;
  for (const auto& t : traces) {
    s.mean_noc85 += static_cast<double>(t.noc85);
    s.mean_noc90 += static_cast<double>(t.noc90);
    s.failures85 += t.failed85;
    s.failures90 += t.failed90;
  }
  s.mean_noc85 /= static_cast<double>(traces.size());
  s.mean_noc90 /= static_cast<double>(traces.size());
  for (std::size_t k = 1; k <= kMaxClicks; ++k) s.miou.push_back(miou_at_k(traces, k));
  return s;
}

// ---------------------------------------------------------------------------
// Predictors

/// Returns the ground truth regardless of clicks.
inline Predictor make_oracle() {
  return [](const NocSample& s, std::span<const ClickRecord>) { return to_prob(s.gt); };
}

/// Returns a fixed map regardless of clicks; never improves.
inline Predictor make_constant(double p) {
  return [p](const NocSample& s, std::span<const ClickRecord>) {
    return ProbMap(s.gt.height(), s.gt.width(), p);
  };
}

/// Ground truth with each pixel flipped with probability error_rate / k after
/// k clicks; pixels inside a click disk are always correct. The flip pattern
/// is a pure function of (seed, k, pixel).
inline Predictor make_noisy_oracle(double error_rate, Seed seed,
                                   double radius = kDefaultClickRadius) {
  require(error_rate >= 0.0 && error_rate <= 1.0, "noisy oracle: error_rate must lie in [0, 1]");
  return [error_rate, seed, radius](const NocSample& s, std::span<const ClickRecord> clicks) {
    const std::size_t h = s.gt.height(), w = s.gt.width();
    const ClickMaps cm = encode_clicks(clicks, h, w, radius);
    Rng rng = Rng(seed, Stream::clicksim).split(clicks.size());
    const double rate = error_rate / static_cast<double>(std::max<std::size_t>(1, clicks.size()));
    std::vector<double> out(h * w);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const bool flip = rng.uniform() < rate;
      const bool guided = cm.positive[i] > 0.0 || cm.negative[i] > 0.0;
      out[i] = (flip && !guided) ? 1.0 - s.gt[i] : s.gt[i];
    }
    return ProbMap(h, w, std::move(out));
  };
}

/// One NoC sample per ground-truth instance.
inline std::vector<NocSample> noc_samples(const SynthSample& s) {
  std::vector<NocSample> out;
  for (const auto& gt : s.gt_instances) out.push_back({feature_channels(s), gt});
  return out;
}

}  // namespace iseg
