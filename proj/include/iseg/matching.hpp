// Mask-adaptive matching of query predictions to ground-truth instances and
// assembly of the total set-prediction loss.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "iseg/adaptive.hpp"
#include "iseg/core.hpp"
#include "iseg/losses.hpp"

namespace iseg {

enum class ClickClass : int { object = 0, unclick = 1 };

struct InstancePrediction {
  ProbMap mask;
  std::array<double, 2> click_probs{0.5, 0.5};  // {object, unclick}

  void validate() const {
    const double s = click_probs[0] + click_probs[1];
    if (click_probs[0] < 0.0 || click_probs[1] < 0.0 || std::abs(s - 1.0) > 1e-9)
      throw ParameterError("InstancePrediction: click probabilities must form a simplex");
  }
};

struct GroundTruthInstance {
  BinaryMask mask;
  ClickClass click_class = ClickClass::object;

  std::array<int, 2> one_hot() const {
    return click_class == ClickClass::object ? std::array<int, 2>{1, 0}
                                             : std::array<int, 2>{0, 1};
  }

  static GroundTruthInstance from_one_hot(BinaryMask mask, std::array<int, 2> c) {
    if (!((c[0] == 1 && c[1] == 0) || (c[0] == 0 && c[1] == 1)))
      throw ParameterError("GroundTruthInstance: click vector must be one-hot");
    return {std::move(mask), c[0] == 1 ? ClickClass::object : ClickClass::unclick};
  }
};

struct LossWeights {
  double lambda_mask = 1.0;
  double lambda_cli = 2.0;
  double lambda_afl = 5.0;
  double lambda_dice = 5.0;
  double unclick_weight = 0.1;

  void validate() const {
    for (double v : {lambda_mask, lambda_cli, lambda_afl, lambda_dice, unclick_weight})
      require(v >= 0.0 && std::isfinite(v), "LossWeights: weights must be finite and >= 0");
  }
};

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> assignment;  // (prediction, gt)
  std::vector<std::size_t> unmatched_predictions;
  std::vector<double> pair_costs;
  double total_cost = 0.0;
};

/// Row-major N x M cost matrix.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

namespace detail {

inline double click_nll(const InstancePrediction& p, ClickClass c) {
  return -std::log(std::max(p.click_probs[static_cast<int>(c)], kDefaultEpsClip));
}

// Minimum-cost assignment of every row of an n x m matrix (n <= m) to a
// distinct column. Shortest augmenting path with potentials, O(n^2 m).
// Returns the column chosen by each row.
inline std::vector<std::size_t> assign_rows(const std::vector<double>& a, std::size_t n,
                                            std::size_t m) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

// Optimal cost of matching min(rows, cols) pairs among the active rows/cols.
inline double optimal_cost(const CostMatrix& cost, const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  const bool transpose = rows.size() > cols.size();
  const auto& r = transpose ? cols : rows;
  const auto& c = transpose ? rows : cols;
  std::vector<double> a(r.size() * c.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j)
      a[i * c.size() + j] = transpose ? cost(c[j], r[i]) : cost(r[i], c[j]);
  const auto sol = assign_rows(a, r.size(), c.size());
  double total = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) total += a[i * c.size() + sol[i]];
  return total;
}

inline bool cost_equal(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

/// Minimum-total-cost injective assignment of size min(N, M).
///
/// Among optimal assignments the lexicographically smallest one is returned:
/// predictions are fixed in index order, each taking the lowest gt index (or,
/// when N > M, staying unmatched as the last option) that still admits an
/// optimal completion.
inline MatchResult hungarian(const CostMatrix& cost) {
  if (cost.rows == 0 || cost.cols == 0) throw DimensionError("hungarian: empty cost matrix");
  if (cost.values.size() != cost.rows * cost.cols)
    throw DimensionError("hungarian: value count does not match shape");
  for (double v : cost.values)
    if (!std::isfinite(v)) throw ParameterError("hungarian: cost entries must be finite");

  std::vector<std::size_t> rows(cost.rows), cols(cost.cols);
  std::iota(rows.begin(), rows.end(), 0);
  std::iota(cols.begin(), cols.end(), 0);
  const double best = detail::optimal_cost(cost, rows, cols);

  MatchResult result;
  double fixed = 0.0;
  std::vector<std::size_t> free_rows = rows;
  std::vector<std::size_t> free_cols = cols;
  for (std::size_t i = 0; i < cost.rows; ++i) {
    free_rows.erase(std::find(free_rows.begin(), free_rows.end(), i));
    bool placed = false;
    for (std::size_t k = 0; k < free_cols.size() && !placed; ++k) {
      const std::size_t j = free_cols[k];
      std::vector<std::size_t> rest_cols = free_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<long>(k));
      const double c = fixed + cost(i, j) + detail::optimal_cost(cost, free_rows, rest_cols);
      if (detail::cost_equal(c, best)) {
        result.assignment.emplace_back(i, j);
        result.pair_costs.push_back(cost(i, j));
        fixed += cost(i, j);
        free_cols = std::move(rest_cols);
        placed = true;
      }
    }
    if (!placed) result.unmatched_predictions.push_back(i);
  }
  result.total_cost = std::accumulate(result.pair_costs.begin(), result.pair_costs.end(), 0.0);
  return result;
}

/// lambda_mask (lambda_afl afl + lambda_dice dice) + lambda_cli (-log p[class]).
inline double pair_cost(const InstancePrediction& pred, const GroundTruthInstance& gt,
                        const LossWeights& w = {}, const AflParams& afl_params = {}) {
  require_same_shape(pred.mask, gt.mask, "pair_cost");
  const double l_afl = afl(pred.mask, gt.mask, afl_params).first.value;
  const double l_dice = dice(pred.mask, gt.mask).value;
  return w.lambda_mask * (w.lambda_afl * l_afl + w.lambda_dice * l_dice) +
         w.lambda_cli * detail::click_nll(pred, gt.click_class);
}

struct PairBreakdown {
  std::size_t prediction = 0;
  std::size_t gt = 0;
  double afl = 0.0;
  double dice = 0.0;
  double click = 0.0;
};

struct TotalLoss {
  double total = 0.0;
  MatchResult match;
  std::vector<PairBreakdown> pairs;
  double mask_term = 0.0;     // sum lambda_mask * L_mask over matched pairs
  double click_term = 0.0;    // sum lambda_cli * CE over matched pairs
  double unclick_term = 0.0;  // unclick_weight * lambda_cli * CE over unmatched predictions
};

inline TotalLoss total_loss(const std::vector<InstancePrediction>& preds,
                            const std::vector<GroundTruthInstance>& gts,
                            const LossWeights& w = {}, const AflParams& afl_params = {}) {
  if (preds.empty()) throw DimensionError("total_loss: need at least one prediction");
  w.validate();
  for (const auto& p : preds) {
    p.validate();
    require_same_shape(p.mask, preds.front().mask, "total_loss");
  }
  for (const auto& g : gts) require_same_shape(g.mask, preds.front().mask, "total_loss");

  TotalLoss out;
  if (gts.empty()) {
    for (std::size_t i = 0; i < preds.size(); ++i) out.match.unmatched_predictions.push_back(i);
  } else {
    CostMatrix cm{preds.size(), gts.size(), std::vector<double>(preds.size() * gts.size())};
    for (std::size_t i = 0; i < preds.size(); ++i)
      for (std::size_t j = 0; j < gts.size(); ++j) cm(i, j) = pair_cost(preds[i], gts[j], w, afl_params);
    out.match = hungarian(cm);
  }

  for (auto [i, j] : out.match.assignment) {
    PairBreakdown b{i, j, afl(preds[i].mask, gts[j].mask, afl_params).first.value,
                    dice(preds[i].mask, gts[j].mask).value,
                    detail::click_nll(preds[i], gts[j].click_class)};
    out.mask_term += w.lambda_mask * (w.lambda_afl * b.afl + w.lambda_dice * b.dice);
    out.click_term += w.lambda_cli * b.click;
    out.pairs.push_back(b);
  }
  for (std::size_t i : out.match.unmatched_predictions)
    out.unclick_term += w.unclick_weight * w.lambda_cli * detail::click_nll(preds[i], ClickClass::unclick);
  out.total = out.mask_term + out.click_term + out.unclick_term;
  return out;
}

}  // namespace iseg
