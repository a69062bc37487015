// Adaptive Focal Loss.
//
// The loss reweights the focal modulating factor twice:
//   gamma_a = 1 - mean foreground pt            (difficulty adjustment)
//   gamma_d = gamma + gamma_a
//   mu      = N / sum_i (1 - pt_i)^gamma_d (1 + delta gamma_d)
// and evaluates
//   L = sum_i [ -mu (1 - pt_i)^gamma_d log pt_i + alpha (1 - pt_i)^(gamma_d + 1) ].
//
// gamma_a and mu are computed from the clamped pt map in a reduction pass and
// are treated as constants when differentiating (two-phase: reduce, then map).
//
// The series helpers below expand the BCE and AFL gradients in powers of
// (1 - pt). They are verification tools restricted to pt > 0.5, not the
// production gradient.
#pragma once

#include <cmath>
#include <cstddef>
#include <tuple>
#include <vector>

#include "iseg/core.hpp"
#include "iseg/losses.hpp"

namespace iseg {

struct AflParams {
  double gamma = 2.0;
  double alpha = 1.0;
  double delta = 0.4;
  bool ada_enabled = true;
  bool agr_enabled = true;
  double eps_clip = kDefaultEpsClip;

  void validate() const {
    detail::check_gamma(gamma);
    require(alpha >= 0.0 && std::isfinite(alpha), "afl: alpha must be >= 0");
    require(delta >= 0.0 && delta <= 1.0, "afl: delta must lie in [0, 1]");
    check_eps_clip(eps_clip);
  }
};

struct AflDiagnostics {
  double gamma_a = 0.0;
  double gamma_d = 0.0;
  double mu = 1.0;
  std::size_t hard_count = 0;
  double foreground_pt_mean = 1.0;
};

/// Denominators below this fraction of N cap mu.
inline constexpr double kMuFloor = 1e-12;

/// 1 - mean pt over foreground pixels; 0 when there is no foreground.
inline double gamma_a(const PtMap& pt, const BinaryMask& gt) {
  require_same_shape(pt, gt, "gamma_a");
  double sum = 0.0;
  std::size_t hard = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i]) {
      sum += pt[i];
      ++hard;
    }
  }
  if (hard == 0) return 0.0;
  return 1.0 - sum / static_cast<double>(hard);
}

inline double gamma_a(const ProbMap& pred, const BinaryMask& gt,
                      double eps = kDefaultEpsClip) {
  return gamma_a(pt_map(pred, gt, eps), gt);
}

inline double mu(const PtMap& pt, double gamma_d, double delta) {
  if (pt.empty()) throw DimensionError("mu: empty pt map");
  require(gamma_d >= 0.0, "mu: gamma_d must be >= 0");
  require(delta >= 0.0 && delta <= 1.0, "mu: delta must lie in [0, 1]");
  const double n = static_cast<double>(pt.size());
  const double boost = 1.0 + delta * gamma_d;
  double denom = 0.0;
  for (double v : pt.values()) denom += std::pow(1.0 - v, gamma_d) * boost;
  return n / std::max(denom, kMuFloor * n);
}

/// AFL with externally fixed gamma_d and mu. This is the map phase of afl()
/// and also the function finite differences are taken against.
inline LossOutput afl_with_coefficients(const ProbMap& pred, const BinaryMask& gt,
                                        double gamma_d, double mu_value, double alpha,
                                        double eps = kDefaultEpsClip) {
  require_same_shape(pred, gt, "afl");
  check_eps_clip(eps);
  LossOutput out;
  std::vector<double> g(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double pt = std::max(raw_pt(pred[i], gt[i]), eps);
    const double u = 1.0 - pt;
    const double m = std::pow(u, gamma_d);
    out.value += -mu_value * m * std::log(pt) + alpha * m * u;
    double dpt = -mu_value * m / pt - alpha * (gamma_d + 1.0) * m;
    if (gamma_d != 0.0 && pt < 1.0)
      dpt += mu_value * gamma_d * std::pow(u, gamma_d - 1.0) * std::log(pt);
    g[i] = dpt * pt_slope(pred[i], gt[i], eps);
  }
  out.grad = Field(pred.height(), pred.width(), std::move(g));
  return out;
}

inline std::pair<LossOutput, AflDiagnostics> afl(const ProbMap& pred, const BinaryMask& gt,
                                                 const AflParams& params = {}) {
  require_same_shape(pred, gt, "afl");
  params.validate();

  // Reduce.
  const PtMap pt = pt_map(pred, gt, params.eps_clip);
  AflDiagnostics d;
  d.hard_count = count_ones(gt);
  const double ga = gamma_a(pt, gt);
  d.foreground_pt_mean = 1.0 - ga;
  d.gamma_a = params.ada_enabled ? ga : 0.0;
  d.gamma_d = params.gamma + d.gamma_a;
  d.mu = params.agr_enabled ? mu(pt, d.gamma_d, params.delta) : 1.0;

  // Map.
  LossOutput out =
      afl_with_coefficients(pred, gt, d.gamma_d, d.mu, params.alpha, params.eps_clip);
  out.diagnostics = {{"gamma_a", d.gamma_a},
                     {"gamma_d", d.gamma_d},
                     {"mu", d.mu},
                     {"hard_count", static_cast<double>(d.hard_count)},
                     {"foreground_pt_mean", d.foreground_pt_mean}};
  return {std::move(out), d};
}

// ---------------------------------------------------------------------------
// Series expansions of the gradient magnitude -dL/dpt.

namespace detail {

inline void check_series_domain(const PtMap& pt, int terms, int min_terms, const char* who) {
  if (terms < min_terms)
    throw ParameterError(std::string(who) + ": terms must be >= " + std::to_string(min_terms));
  for (double v : pt.values())
    if (!(v > 0.5))
      throw DomainError(std::string(who) + ": series needs pt > 0.5 everywhere");
}

}  // namespace detail

/// sum_{k=0..terms-1} (1 - pt)^k, which tends to 1/pt.
inline Field bce_grad_series(const PtMap& pt, int terms) {
  detail::check_series_domain(pt, terms, 1, "bce_grad_series");
  std::vector<double> out(pt.size());
  for (std::size_t i = 0; i < pt.size(); ++i) {
    const double u = 1.0 - pt[i];
    double acc = 0.0, power = 1.0;
    for (int k = 0; k < terms; ++k) {
      acc += power;
      power *= u;
    }
    out[i] = acc;
  }
  return Field(pt.height(), pt.width(), std::move(out));
}

/// (1 - pt)^gd [ (1 + alpha)(1 + gd) + sum_{k>=1} (1 + gd / (k + 1)) (1 - pt)^k ]
/// truncated to `terms` bracket terms. With mu = 1 this converges to the
/// exact -dL/dpt of the focal + poly form.
inline Field afl_grad_series(const PtMap& pt, double gamma_d, double alpha, int terms) {
  detail::check_series_domain(pt, terms, 1, "afl_grad_series");
  std::vector<double> out(pt.size());
  for (std::size_t i = 0; i < pt.size(); ++i) {
    const double u = 1.0 - pt[i];
    double acc = (1.0 + alpha) * (1.0 + gamma_d);
    double power = 1.0;
    for (int k = 1; k < terms; ++k) {
      power *= u;
      acc += (1.0 + gamma_d / (k + 1)) * power;
    }
    out[i] = std::pow(u, gamma_d) * acc;
  }
  return Field(pt.height(), pt.width(), std::move(out));
}

struct GradientDecomposition {
  Field nu;       // BCE column: 1 + u + u^2 + ...
  Field nabla_b;  // correction column: gd(1 + alpha) + alpha + gd/2 u + gd/3 u^2 + ...
  Field mixed;    // (1 + delta gd) nu
};

/// Splits the bracket of the AFL gradient series into the BCE column and the
/// vertical correction column. The common (1 - pt)^gd prefactor is not
/// applied, so prefactor * (nu + nabla_b) equals afl_grad_series.
inline GradientDecomposition gradient_decomposition(const PtMap& pt, double gamma_d,
                                                    double alpha, double delta, int terms) {
  detail::check_series_domain(pt, terms, 2, "gradient_decomposition");
  require(delta >= 0.0 && delta <= 1.0, "gradient_decomposition: delta must lie in [0, 1]");
  std::vector<double> nu(pt.size()), nb(pt.size()), mixed(pt.size());
  for (std::size_t i = 0; i < pt.size(); ++i) {
    const double u = 1.0 - pt[i];
    double left = 1.0;
    double right = gamma_d * (1.0 + alpha) + alpha;
    double power = 1.0;
    for (int k = 1; k < terms; ++k) {
      power *= u;
      left += power;
      right += gamma_d / (k + 1) * power;
    }
    nu[i] = left;
    nb[i] = right;
    mixed[i] = (1.0 + delta * gamma_d) * left;
  }
  const auto h = pt.height(), w = pt.width();
  return {Field(h, w, std::move(nu)), Field(h, w, std::move(nb)), Field(h, w, std::move(mixed))};
}

/// |sum a_i b_i - (1/N) sum a_i sum b_i| with a_i = (1 - pt_i)^gd and
/// b_i = 1 / pt_i. Zero for constant maps; nonzero in general.
///
/// Evaluated through the pairwise form (1/2N) |sum_ij (a_i - a_j)(b_i - b_j)|
/// so that constant maps give exactly 0 in floating point. O(N^2).
inline double chebyshev_identity_check(const PtMap& pt, double gamma_d) {
  const std::size_t n = pt.size();
  if (n == 0) return 0.0;
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = std::pow(1.0 - pt[i], gamma_d);
    b[i] = 1.0 / pt[i];
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) acc += (a[i] - a[j]) * (b[i] - b[j]);
  return std::abs(acc) / static_cast<double>(n);
}

}  // namespace iseg
