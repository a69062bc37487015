// Central finite-difference checks of the analytic loss gradients.
//
// Adaptive coefficients (AFL gamma_d and mu, the NFL normalizer) are frozen
// at their evaluated values before differencing, matching the detached
// analytic gradient.
#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "iseg/loss_config.hpp"

namespace iseg {

struct GradCheckCase {
  LossConfig config;
  ProbMap pred;
  BinaryMask gt;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t pixels = 0;
};

inline constexpr double kFdStep = 1e-6;

/// |a - n| / max(|a|, |n|); zero when both vanish.
inline double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale == 0.0) return 0.0;
  return std::abs(analytic - numeric) / scale;
}

/// Losses whose value is a sum of independent per-pixel terms once adaptive
/// coefficients (and the automatic class weight) are frozen.
inline bool pixel_separable(LossKind k) {
  return k != LossKind::dice && k != LossKind::soft_iou;
}

/// Central differences of the loss value against the analytic gradient.
///
/// For pixel-separable losses the quotient is taken on the perturbed pixel's
/// own term (a 1x1 map carrying its label), which is mathematically identical
/// to differencing the full sum but avoids cancelling against the other
/// pixels' rounding error. Dice and soft IoU are differenced on the full map.
inline GradCheckResult grad_check(const GradCheckCase& c, double h = kFdStep) {
  const LossOutput ref = evaluate_loss(c.config, c.pred, c.gt);
  const bool separable = pixel_separable(c.config.kind);

  LossConfig frozen = c.config;
  if (ref.diagnostics.count("beta")) frozen.beta = ref.diagnostics.at("beta");
  const double gd = ref.diagnostics.at("gamma_d");
  const double mu_v = ref.diagnostics.at("mu");
  const double nfl_scale = ref.diagnostics.count("scale") ? ref.diagnostics.at("scale") : 0.0;

  auto value = [&](const ProbMap& p, const BinaryMask& y) {
    switch (c.config.kind) {
      case LossKind::afl:
        return afl_with_coefficients(p, y, gd, mu_v, c.config.alpha, c.config.eps_clip).value;
      case LossKind::nfl:
        return nfl_scale * focal(p, y, c.config.gamma, c.config.eps_clip).value;
      default:
        return evaluate_loss(frozen, p, y).value;
    }
  };

  GradCheckResult r;
  r.pixels = c.pred.size();
  std::vector<double> buf(c.pred.values().begin(), c.pred.values().end());
  const auto rows = c.pred.height(), cols = c.pred.width();
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const double p0 = buf[i];
    double up, down;
    if (separable) {
      const BinaryMask y(1, 1, c.gt[i]);
      up = value(ProbMap(1, 1, p0 + h), y);
      down = value(ProbMap(1, 1, p0 - h), y);
    } else {
      buf[i] = p0 + h;
      up = value(ProbMap(rows, cols, buf), c.gt);
      buf[i] = p0 - h;
      down = value(ProbMap(rows, cols, buf), c.gt);
      buf[i] = p0;
    }
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = ref.grad[i];
    r.max_abs_error = std::max(r.max_abs_error, std::abs(analytic - numeric));
    r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic, numeric));
  }
  return r;
}

/// Random small map with probabilities kept away from 0 and 1 (so pt stays
/// far above the clip floor) and at least one pixel of each class.
inline GradCheckCase random_grad_case(Rng& rng, LossKind kind) {
  const std::size_t h = 2 + rng.below(4), w = 2 + rng.below(4);
  const std::size_t n = h * w;
  std::vector<double> p(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = rng.uniform(0.02, 0.98);
    y[i] = rng.uniform() < 0.4 ? 1 : 0;
  }
  const std::size_t fg = rng.below(n);
  y[fg] = 1;
  y[(fg + 1 + rng.below(n - 1)) % n] = 0;

  LossConfig cfg;
  cfg.kind = kind;
  cfg.gamma = rng.uniform(0.0, 5.0);
  cfg.alpha = rng.uniform(0.0, 2.0);
  cfg.delta = rng.uniform(0.0, 1.0);
  cfg.smooth = rng.uniform(0.0, 2.0);
  if (kind == LossKind::wbce || kind == LossKind::balanced_ce) {
    if (rng.uniform() < 0.5) cfg.beta = rng.uniform(0.1, 0.9);
  }
  return {cfg, ProbMap(h, w, std::move(p)), BinaryMask(h, w, std::move(y))};
}

}  // namespace iseg
