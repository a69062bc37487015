// Name-based loss selection shared by the trainer and the CLI.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "iseg/adaptive.hpp"
#include "iseg/losses.hpp"

namespace iseg {

enum class LossKind { bce, wbce, balanced_ce, soft_iou, focal, nfl, poly, dice, afl };

inline constexpr std::array<LossKind, 9> kAllLosses = {
    LossKind::bce,  LossKind::wbce, LossKind::balanced_ce, LossKind::soft_iou, LossKind::focal,
    LossKind::nfl,  LossKind::poly, LossKind::dice,        LossKind::afl};

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::bce: return "bce";
    case LossKind::wbce: return "wbce";
    case LossKind::balanced_ce: return "balanced_ce";
    case LossKind::soft_iou: return "soft_iou";
    case LossKind::focal: return "focal";
    case LossKind::nfl: return "nfl";
    case LossKind::poly: return "poly";
    case LossKind::dice: return "dice";
    case LossKind::afl: return "afl";
  }
  return "?";
}

inline LossKind parse_loss_kind(std::string_view name) {
  for (LossKind k : kAllLosses)
    if (to_string(k) == name) return k;
  throw ParameterError("unknown loss '" + std::string(name) + "'");
}

enum class Reduction { sum, mean };

struct LossConfig {
  LossKind kind = LossKind::afl;
  double gamma = 2.0;
  double alpha = 1.0;
  double delta = 0.4;
  bool ada_enabled = true;
  bool agr_enabled = true;
  std::optional<double> beta;
  double smooth = 1.0;
  double eps_clip = kDefaultEpsClip;
  Reduction reduction = Reduction::sum;

  AflParams afl_params() const {
    return {gamma, alpha, delta, ada_enabled, agr_enabled, eps_clip};
  }
};

/// Evaluates the configured loss. Diagnostics always carry gamma_a, gamma_d
/// and mu so callers can log them uniformly (0, gamma, 1 for non-AFL losses).
/// Mean reduction applies to pixel-sum losses only; dice and soft_iou are
/// already normalized.
inline LossOutput evaluate_loss(const LossConfig& cfg, const ProbMap& pred, const BinaryMask& gt) {
  LossOutput out;
  bool pixel_sum = true;
  switch (cfg.kind) {
    case LossKind::bce: out = bce(pred, gt, cfg.eps_clip); break;
    case LossKind::wbce: out = aux_loss(BaselineKind::wbce, pred, gt, cfg.beta, cfg.eps_clip); break;
    case LossKind::balanced_ce:
      out = aux_loss(BaselineKind::balanced_ce, pred, gt, cfg.beta, cfg.eps_clip);
      break;
    case LossKind::soft_iou:
      out = aux_loss(BaselineKind::soft_iou, pred, gt, std::nullopt, cfg.eps_clip);
      pixel_sum = false;
      break;
    case LossKind::focal: out = focal(pred, gt, cfg.gamma, cfg.eps_clip); break;
    case LossKind::nfl: out = nfl(pred, gt, cfg.gamma, cfg.eps_clip); break;
    case LossKind::poly: out = poly(pred, gt, cfg.gamma, cfg.alpha, cfg.eps_clip); break;
    case LossKind::dice:
      out = dice(pred, gt, cfg.smooth);
      pixel_sum = false;
      break;
    case LossKind::afl: out = afl(pred, gt, cfg.afl_params()).first; break;
  }
  if (cfg.kind != LossKind::afl) {
    const bool has_gamma = cfg.kind == LossKind::focal || cfg.kind == LossKind::nfl ||
                           cfg.kind == LossKind::poly;
    out.diagnostics.emplace("gamma_a", 0.0);
    out.diagnostics.emplace("gamma_d", has_gamma ? cfg.gamma : 0.0);
    out.diagnostics.emplace("mu", 1.0);
  }
  if (pixel_sum && cfg.reduction == Reduction::mean) out = mean_reduced(std::move(out));
  return out;
}

}  // namespace iseg
