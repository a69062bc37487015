// Baseline pixel losses with closed-form gradients w.r.t. the predicted
// probability: BCE, focal, poly, normalized focal, Dice, and the weighted
// cross-entropy / soft-IoU comparison losses.
//
// All pixel-sum losses reduce by SUM over pixels. Gradients pass through the
// P_t case split (dpt/dp = +1 on foreground, -1 on background) and are zero
// where the eps_clip floor is active.
#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iseg/core.hpp"

namespace iseg {

struct LossOutput {
  double value = 0.0;
  Field grad;  // dL/dp per pixel
  std::map<std::string, double> diagnostics;
};

enum class BaselineKind { bce, wbce, balanced_ce, soft_iou, focal, nfl, poly, dice };

inline std::string_view to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::bce: return "bce";
    case BaselineKind::wbce: return "wbce";
    case BaselineKind::balanced_ce: return "balanced_ce";
    case BaselineKind::soft_iou: return "soft_iou";
    case BaselineKind::focal: return "focal";
    case BaselineKind::nfl: return "nfl";
    case BaselineKind::poly: return "poly";
    case BaselineKind::dice: return "dice";
  }
  return "?";
}

namespace detail {

inline void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 5.0))
    throw ParameterError("gamma must lie in [0, 5], got " + std::to_string(gamma));
}

// (1 - pt)^g with 0^0 = 1.
inline double modifier(double pt, double g) { return std::pow(1.0 - pt, g); }

// g * (1 - pt)^(g - 1) * log(pt), the derivative of the modulating factor
// times log pt. Vanishes for g = 0 and at pt = 1.
inline double modifier_slope_log(double pt, double g) {
  if (g == 0.0 || pt >= 1.0) return 0.0;
  return g * std::pow(1.0 - pt, g - 1.0) * std::log(pt);
}

inline Field make_grad(const ProbMap& like, std::vector<double> g) {
  return Field(like.height(), like.width(), std::move(g));
}

}  // namespace detail

/// -sum log pt.
inline LossOutput bce(const ProbMap& pred, const BinaryMask& gt,
                      double eps = kDefaultEpsClip) {
  require_same_shape(pred, gt, "bce");
  check_eps_clip(eps);
  LossOutput out;
  std::vector<double> g(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double pt = std::max(raw_pt(pred[i], gt[i]), eps);
    out.value -= std::log(pt);
    g[i] = -pt_slope(pred[i], gt[i], eps) / pt;
  }
  out.grad = detail::make_grad(pred, std::move(g));
  return out;
}

/// -sum (1 - pt)^gamma log pt, gamma in [0, 5].
inline LossOutput focal(const ProbMap& pred, const BinaryMask& gt, double gamma,
                        double eps = kDefaultEpsClip) {
  require_same_shape(pred, gt, "focal");
  detail::check_gamma(gamma);
  check_eps_clip(eps);
  LossOutput out;
  std::vector<double> g(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double pt = std::max(raw_pt(pred[i], gt[i]), eps);
    const double m = detail::modifier(pt, gamma);
    out.value -= m * std::log(pt);
    const double dpt = detail::modifier_slope_log(pt, gamma) - m / pt;
    g[i] = dpt * pt_slope(pred[i], gt[i], eps);
  }
  out.grad = detail::make_grad(pred, std::move(g));
  return out;
}

/// Focal plus alpha * (1 - pt)^(gamma + 1) per pixel.
inline LossOutput poly(const ProbMap& pred, const BinaryMask& gt, double gamma,
                       double alpha, double eps = kDefaultEpsClip) {
  require_same_shape(pred, gt, "poly");
  detail::check_gamma(gamma);
  require(alpha >= 0.0, "poly: alpha must be >= 0");
  check_eps_clip(eps);
  LossOutput out;
  std::vector<double> g(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double pt = std::max(raw_pt(pred[i], gt[i]), eps);
    const double u = 1.0 - pt;
    const double m = detail::modifier(pt, gamma);
    out.value += -m * std::log(pt) + alpha * m * u;
    const double dpt =
        detail::modifier_slope_log(pt, gamma) - m / pt - alpha * (gamma + 1.0) * m;
    g[i] = dpt * pt_slope(pred[i], gt[i], eps);
  }
  out.grad = detail::make_grad(pred, std::move(g));
  return out;
}

/// Normalized focal loss: focal * N / sum (1 - pt)^gamma. The normalizer is
/// detached. All pt = 1 gives 0 with a zero gradient.
inline LossOutput nfl(const ProbMap& pred, const BinaryMask& gt, double gamma,
                      double eps = kDefaultEpsClip) {
  LossOutput out = focal(pred, gt, gamma, eps);
  const PtMap pt = pt_map(pred, gt, eps);
  double norm = 0.0;
  for (double v : pt.values()) norm += detail::modifier(v, gamma);
  if (norm <= 0.0) {
    out.value = 0.0;
    out.grad = Field(pred.height(), pred.width(), 0.0);
    out.diagnostics["normalizer"] = 0.0;
    return out;
  }
  const double scale = static_cast<double>(pred.size()) / norm;
  out.value *= scale;
  std::vector<double> g(out.grad.values().begin(), out.grad.values().end());
  for (double& v : g) v *= scale;
  out.grad = detail::make_grad(pred, std::move(g));
  out.diagnostics["normalizer"] = norm;
  out.diagnostics["scale"] = scale;
  return out;
}

/// 1 - (2 sum p y + smooth) / (sum p + sum y + smooth).
inline LossOutput dice(const ProbMap& pred, const BinaryMask& gt, double smooth = 1.0) {
  require_same_shape(pred, gt, "dice");
  require(smooth >= 0.0, "dice: smooth must be >= 0");
  double inter = 0.0, total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] * gt[i];
    total += pred[i] + gt[i];
  }
  LossOutput out;
  const double num = 2.0 * inter + smooth;
  const double den = total + smooth;
  if (den <= 0.0) {
    out.grad = Field(pred.height(), pred.width(), 0.0);
    return out;
  }
  out.value = 1.0 - num / den;
  std::vector<double> g(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    g[i] = -(2.0 * gt[i] * den - num) / (den * den);
  out.grad = detail::make_grad(pred, std::move(g));
  return out;
}

/// Weighted/balanced cross-entropy and soft IoU.
///
/// wbce:        -sum [beta y log p + (1 - y) log(1 - p)], beta > 0,
///              default beta = negatives / positives.
/// balanced_ce: -sum [beta y log p + (1 - beta)(1 - y) log(1 - p)], beta in (0, 1),
///              default beta = fraction of negatives.
/// soft_iou:    1 - sum p y / sum (p + y - p y); beta ignored.
inline LossOutput aux_loss(BaselineKind kind, const ProbMap& pred, const BinaryMask& gt,
                           std::optional<double> beta = std::nullopt,
                           double eps = kDefaultEpsClip) {
  require_same_shape(pred, gt, "aux_loss");
  check_eps_clip(eps);
  LossOutput out;
  std::vector<double> g(pred.size());

  if (kind == BaselineKind::soft_iou) {
    double inter = 0.0, uni = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      inter += pred[i] * gt[i];
      uni += pred[i] + gt[i] - pred[i] * gt[i];
    }
    if (uni > 0.0) {
      out.value = 1.0 - inter / uni;
      for (std::size_t i = 0; i < pred.size(); ++i)
        g[i] = -(gt[i] * uni - inter * (1.0 - gt[i])) / (uni * uni);
    }
    out.grad = detail::make_grad(pred, std::move(g));
    return out;
  }

  if (kind != BaselineKind::wbce && kind != BaselineKind::balanced_ce)
    throw ParameterError("aux_loss: kind must be wbce, balanced_ce or soft_iou");

  const auto pos = static_cast<double>(count_ones(gt));
  const auto neg = static_cast<double>(gt.size()) - pos;
  double w_pos = 1.0, w_neg = 1.0;
  if (kind == BaselineKind::wbce) {
    double b;
    if (beta) {
      b = *beta;
    } else {
      if (pos == 0.0) throw ParameterError("wbce: automatic beta needs a foreground pixel");
      b = neg / pos;
    }
    require(b > 0.0 && std::isfinite(b), "wbce: beta must be positive");
    w_pos = b;
    out.diagnostics["beta"] = b;
  } else {
    double b;
    if (beta) {
      b = *beta;
    } else {
      if (pos == 0.0)
        throw ParameterError("balanced_ce: automatic beta needs a foreground pixel");
      b = neg / static_cast<double>(gt.size());
    }
    require(b > 0.0 && b < 1.0, "balanced_ce: beta must lie in (0, 1)");
    w_pos = b;
    w_neg = 1.0 - b;
    out.diagnostics["beta"] = b;
  }

  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double w = gt[i] ? w_pos : w_neg;
    const double pt = std::max(raw_pt(pred[i], gt[i]), eps);
    out.value -= w * std::log(pt);
    g[i] = -w * pt_slope(pred[i], gt[i], eps) / pt;
  }
  out.grad = detail::make_grad(pred, std::move(g));
  return out;
}

/// Divides value and gradient by the pixel count.
inline LossOutput mean_reduced(LossOutput out) {
  const double n = static_cast<double>(out.grad.size());
  out.value /= n;
  std::vector<double> g(out.grad.values().begin(), out.grad.values().end());
  for (double& v : g) v /= n;
  out.grad = Field(out.grad.height(), out.grad.width(), std::move(g));
  return out;
}

/// Truncated series sum_{k=1..terms} (1 - pt)^k / k, which tends to -log pt.
inline double log_series(double pt, int terms) {
  const double u = 1.0 - pt;
  double acc = 0.0, power = 1.0;
  for (int k = 1; k <= terms; ++k) {
    power *= u;
    acc += power / k;
  }
  return acc;
}

}  // namespace iseg
