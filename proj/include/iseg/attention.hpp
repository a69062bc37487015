// Toy clicks-aware masked-attention decoder.
//
// One layer:
//   Q = X f_q,  K = F f_k,  V = F f_v
//   Psi = psi( [Q]_+ omega_f(C)^T ), with -inf wherever the attention mask is -inf
//   A = softmax_rows(Psi + Q K^T)
//   X <- A V + X;  X <- selfattn(X) + X;  X <- ffn(X) + X
// The attention mask of each layer comes from the previous mask predictions,
// binarized at 0.5 and resampled to the layer's scale. A query row that is
// masked everywhere is reset to unmasked.
//
// The multi-scale features are a seeded random projection of the input
// channels at 1/32, 1/16 and 1/8 resolution, plus a 1/4 pixel embedding
// consumed by the mask head.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "iseg/clicks.hpp"
#include "iseg/core.hpp"
#include "iseg/matching.hpp"

namespace iseg {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

namespace linalg {

inline void check(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  check(a.cols == b.rows, "matmul: inner dimensions differ");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

/// a * b^T
inline Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  check(a.cols == b.cols, "matmul_bt: inner dimensions differ");
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * b(j, k);
      out(i, j) = acc;
    }
  return out;
}

inline Matrix add(Matrix a, const Matrix& b) {
  check(a.rows == b.rows && a.cols == b.cols, "add: shape mismatch");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  return a;
}

inline Matrix add_row(Matrix a, std::span<const double> bias) {
  check(bias.size() == a.cols, "add_row: bias length mismatch");
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) a(i, j) += bias[j];
  return a;
}

inline Matrix relu(Matrix a) {
  for (double& v : a.data) v = std::max(v, 0.0);
  return a;
}

inline Matrix scale(Matrix a, double s) {
  for (double& v : a.data) v *= s;
  return a;
}

/// Row-wise softmax. -inf entries get exactly zero weight; a row that is
/// entirely -inf is a caller error.
inline Matrix softmax_rows(Matrix a) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    double mx = kNegInf;
    for (std::size_t j = 0; j < a.cols; ++j) mx = std::max(mx, a(i, j));
    if (mx == kNegInf) throw Error("softmax_rows: fully masked row");
    double sum = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) {
      const double e = a(i, j) == kNegInf ? 0.0 : std::exp(a(i, j) - mx);
      a(i, j) = e;
      sum += e;
    }
    for (std::size_t j = 0; j < a.cols; ++j) a(i, j) /= sum;
  }
  return a;
}

inline Matrix uniform(Rng& rng, std::size_t r, std::size_t c, double bound) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(-bound, bound);
  return m;
}

}  // namespace linalg

// ---------------------------------------------------------------------------

struct AttentionParams {
  std::size_t n_queries = 10;
  std::size_t dim = 16;
  Matrix f_q, f_k, f_v;         // d x d
  Matrix omega_f;               // 2 x d, applied after 3x3 max pooling of (pos, neg) clicks
  double psi_scale = 1.0;       // psi(s) = psi_scale * s + psi_bias
  double psi_bias = 0.0;
  Matrix self_q, self_k, self_v;
  Matrix ffn_1, ffn_2;          // d x d
  std::array<Matrix, 3> mask_head;  // d x d each
  std::array<std::vector<double>, 3> mask_head_bias;
  Matrix click_head;            // d x 2
  std::vector<double> click_head_bias;
  Matrix query_init;            // N x d, X_0

  /// Uniform(-1/sqrt(d), 1/sqrt(d)) initialization from the attention stream.
  static AttentionParams random(std::size_t n_queries, std::size_t dim, Seed seed) {
    require(n_queries >= 1 && dim >= 1, "AttentionParams: n_queries and dim must be >= 1");
    Rng rng(seed, Stream::attention);
    const double b = 1.0 / std::sqrt(static_cast<double>(dim));
    AttentionParams p;
    p.n_queries = n_queries;
    p.dim = dim;
    p.f_q = linalg::uniform(rng, dim, dim, b);
    p.f_k = linalg::uniform(rng, dim, dim, b);
    p.f_v = linalg::uniform(rng, dim, dim, b);
    p.omega_f = linalg::uniform(rng, 2, dim, b);
    p.psi_scale = rng.uniform(-b, b);
    p.psi_bias = rng.uniform(-b, b);
    p.self_q = linalg::uniform(rng, dim, dim, b);
    p.self_k = linalg::uniform(rng, dim, dim, b);
    p.self_v = linalg::uniform(rng, dim, dim, b);
    p.ffn_1 = linalg::uniform(rng, dim, dim, b);
    p.ffn_2 = linalg::uniform(rng, dim, dim, b);
    for (std::size_t k = 0; k < 3; ++k) {
      p.mask_head[k] = linalg::uniform(rng, dim, dim, b);
      p.mask_head_bias[k].resize(dim);
      for (double& v : p.mask_head_bias[k]) v = rng.uniform(-b, b);
    }
    p.click_head = linalg::uniform(rng, dim, 2, b);
    p.click_head_bias = {rng.uniform(-b, b), rng.uniform(-b, b)};
    p.query_init = linalg::uniform(rng, n_queries, dim, 1.0);
    return p;
  }

  /// Every weight and bias zero; queries zero.
  static AttentionParams zeros(std::size_t n_queries, std::size_t dim) {
    AttentionParams p;
    p.n_queries = n_queries;
    p.dim = dim;
    for (Matrix* m : {&p.f_q, &p.f_k, &p.f_v, &p.self_q, &p.self_k, &p.self_v, &p.ffn_1, &p.ffn_2})
      *m = Matrix(dim, dim);
    p.omega_f = Matrix(2, dim);
    p.psi_scale = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      p.mask_head[k] = Matrix(dim, dim);
      p.mask_head_bias[k].assign(dim, 0.0);
    }
    p.click_head = Matrix(dim, 2);
    p.click_head_bias = {0.0, 0.0};
    p.query_init = Matrix(n_queries, dim);
    return p;
  }
};

/// Pixel features at one scale.
struct ScaleFeatures {
  std::size_t h = 0, w = 0;
  Matrix features;   // (h*w) x d
  Field click_map;   // h x w, +1 positive disk, -1 negative disk, 0 elsewhere
};

struct AttentionState {
  Matrix x;           // N x d
  Matrix psi_matrix;  // N x (h*w)
  Matrix attn_mask;   // N x (h*w), entries 0 or -inf
  Matrix attention;   // N x (h*w), softmax weights of the last layer
  std::size_t layer_index = 0;
};

// ---------------------------------------------------------------------------

/// Attention-mask row for one query: 0 where the prediction binarizes to 1,
/// -inf elsewhere; a row with no foreground is reset to all 0.
inline std::vector<double> attn_mask_from_pred(const ProbMap& mask_pred, double threshold = 0.5) {
  const BinaryMask bin = binarize(mask_pred, threshold);
  std::vector<double> row(bin.size());
  bool any = false;
  for (std::size_t i = 0; i < bin.size(); ++i) {
    row[i] = bin[i] ? 0.0 : kNegInf;
    any = any || bin[i];
  }
  if (!any) std::fill(row.begin(), row.end(), 0.0);
  return row;
}

/// Nearest-neighbour resampling (pixel centres).
inline ProbMap resample(const ProbMap& m, std::size_t h, std::size_t w) {
  std::vector<double> out(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t sr = std::min(m.height() - 1, (2 * r + 1) * m.height() / (2 * h));
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t sc = std::min(m.width() - 1, (2 * c + 1) * m.width() / (2 * w));
      out[r * w + c] = m.at(sr, sc);
    }
  }
  return ProbMap(h, w, std::move(out));
}

/// Stacks per-query attention-mask rows at the given scale.
inline Matrix attention_mask(const std::vector<InstancePrediction>& preds, std::size_t h,
                             std::size_t w) {
  Matrix m(preds.size(), h * w);
  for (std::size_t q = 0; q < preds.size(); ++q) {
    const auto row = attn_mask_from_pred(resample(preds[q].mask, h, w));
    std::copy(row.begin(), row.end(), m.data.begin() + static_cast<long>(q * h * w));
  }
  return m;
}

namespace detail {

// 3x3 max pooling (stride 1, same size) of the positive and negative parts of
// the click map, as an (h*w) x 2 matrix.
inline Matrix pooled_clicks(const ScaleFeatures& s) {
  Matrix out(s.h * s.w, 2);
  for (std::size_t r = 0; r < s.h; ++r)
    for (std::size_t c = 0; c < s.w; ++c) {
      double pos = 0.0, neg = 0.0;
      for (std::size_t rr = r == 0 ? 0 : r - 1; rr <= std::min(s.h - 1, r + 1); ++rr)
        for (std::size_t cc = c == 0 ? 0 : c - 1; cc <= std::min(s.w - 1, c + 1); ++cc) {
          const double v = s.click_map.at(rr, cc);
          pos = std::max(pos, v);
          neg = std::max(neg, -v);
        }
      out(r * s.w + c, 0) = pos;
      out(r * s.w + c, 1) = neg;
    }
  return out;
}

inline void check_scale(const ScaleFeatures& s, const AttentionParams& p) {
  if (s.features.rows != s.h * s.w || s.features.cols != p.dim || s.click_map.height() != s.h ||
      s.click_map.width() != s.w)
    throw DimensionError("ScaleFeatures: inconsistent shapes");
}

}  // namespace detail

/// Psi = psi([Q]_+ omega_f(C)^T) with masked positions forced to -inf.
inline Matrix click_attention_matrix(const ScaleFeatures& clicks, const Matrix& x_prev,
                                     const AttentionParams& params, const Matrix& attn_mask) {
  detail::check_scale(clicks, params);
  if (x_prev.rows != params.n_queries || x_prev.cols != params.dim)
    throw DimensionError("click_attention_matrix: query shape mismatch");
  if (attn_mask.rows != params.n_queries || attn_mask.cols != clicks.h * clicks.w)
    throw DimensionError("click_attention_matrix: mask shape mismatch");
  const Matrix q_pos = linalg::relu(linalg::matmul(x_prev, params.f_q));
  const Matrix click_embed = linalg::matmul(detail::pooled_clicks(clicks), params.omega_f);
  Matrix psi = linalg::matmul_bt(q_pos, click_embed);
  for (std::size_t i = 0; i < psi.data.size(); ++i) {
    psi.data[i] = attn_mask.data[i] == kNegInf ? kNegInf
                                               : params.psi_scale * psi.data[i] + params.psi_bias;
  }
  return psi;
}

inline AttentionState camd_layer(const AttentionState& state, const ScaleFeatures& scale,
                                 const AttentionParams& params) {
  detail::check_scale(scale, params);
  const std::size_t n = params.n_queries;
  const std::size_t hw = scale.h * scale.w;
  if (state.x.rows != n || state.x.cols != params.dim)
    throw DimensionError("camd_layer: query shape mismatch");

  // Fully masked rows fall back to no masking.
  Matrix mask = state.attn_mask;
  if (mask.rows != n || mask.cols != hw) throw DimensionError("camd_layer: mask shape mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = mask.row(i);
    if (std::all_of(row.begin(), row.end(), [](double v) { return v == kNegInf; }))
      std::fill(mask.data.begin() + static_cast<long>(i * hw),
                mask.data.begin() + static_cast<long>((i + 1) * hw), 0.0);
  }

  AttentionState next;
  next.layer_index = state.layer_index + 1;
  next.attn_mask = mask;
  next.psi_matrix = click_attention_matrix(scale, state.x, params, mask);

  const Matrix q = linalg::matmul(state.x, params.f_q);
  const Matrix k = linalg::matmul(scale.features, params.f_k);
  const Matrix v = linalg::matmul(scale.features, params.f_v);
  next.attention = linalg::softmax_rows(linalg::add(next.psi_matrix, linalg::matmul_bt(q, k)));
  Matrix x = linalg::add(linalg::matmul(next.attention, v), state.x);

  // Self-attention over queries.
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.dim));
  const Matrix sq = linalg::matmul(x, params.self_q);
  const Matrix sk = linalg::matmul(x, params.self_k);
  const Matrix sv = linalg::matmul(x, params.self_v);
  const Matrix sa = linalg::softmax_rows(linalg::scale(linalg::matmul_bt(sq, sk), inv_sqrt_d));
  x = linalg::add(linalg::matmul(sa, sv), x);

  // Feed-forward.
  x = linalg::add(linalg::matmul(linalg::relu(linalg::matmul(x, params.ffn_1)), params.ffn_2), x);

  for (double val : x.data)
    if (!std::isfinite(val)) throw Error("camd_layer: non-finite query feature");
  next.x = std::move(x);
  return next;
}

/// Mask head (3-layer MLP then dot product with the pixel embedding, logistic)
/// and click head (linear then softmax), one prediction per query.
inline std::vector<InstancePrediction> predict_heads(const Matrix& x, const ScaleFeatures& pixel_embed,
                                                     const AttentionParams& params) {
  detail::check_scale(pixel_embed, params);
  if (x.rows != params.n_queries || x.cols != params.dim)
    throw DimensionError("predict_heads: query shape mismatch");
  Matrix e = x;
  for (std::size_t k = 0; k < 3; ++k) {
    e = linalg::add_row(linalg::matmul(e, params.mask_head[k]), params.mask_head_bias[k]);
    if (k < 2) e = linalg::relu(std::move(e));
  }
  const Matrix logits = linalg::matmul_bt(e, pixel_embed.features);
  const Matrix cls = linalg::add_row(linalg::matmul(x, params.click_head), params.click_head_bias);

  std::vector<InstancePrediction> out;
  out.reserve(x.rows);
  for (std::size_t q = 0; q < x.rows; ++q) {
    std::vector<double> probs(logits.cols);
    for (std::size_t j = 0; j < logits.cols; ++j) probs[j] = 1.0 / (1.0 + std::exp(-logits(q, j)));
    const double m = std::max(cls(q, 0), cls(q, 1));
    const double e0 = std::exp(cls(q, 0) - m), e1 = std::exp(cls(q, 1) - m);
    InstancePrediction p{ProbMap(pixel_embed.h, pixel_embed.w, std::move(probs)),
                         {e0 / (e0 + e1), e1 / (e0 + e1)}};
    out.push_back(std::move(p));
  }
  return out;
}

struct FeaturePyramid {
  std::array<ScaleFeatures, 3> scales;  // coarse to fine: 1/32, 1/16, 1/8
  ScaleFeatures pixel;                  // 1/4, mask-head embedding
};

struct ForwardResult {
  std::vector<InstancePrediction> predictions;
  std::vector<AttentionState> layers;  // one per decoder layer, in order
};

/// Cycles the three scales `blocks` times (3 * blocks layers), refreshing the
/// attention mask from the current mask predictions before every layer.
inline ForwardResult camd_forward(const FeaturePyramid& pyramid, const AttentionParams& params,
                                  std::size_t blocks) {
  require(blocks >= 1, "camd_forward: blocks must be >= 1");
  ForwardResult out;
  AttentionState state;
  state.x = params.query_init;
  auto preds = predict_heads(state.x, pyramid.pixel, params);
  for (std::size_t l = 0; l < 3 * blocks; ++l) {
    const ScaleFeatures& sc = pyramid.scales[l % 3];
    state.attn_mask = attention_mask(preds, sc.h, sc.w);
    state = camd_layer(state, sc, params);
    preds = predict_heads(state.x, pyramid.pixel, params);
    out.layers.push_back(state);
  }
  out.predictions = std::move(preds);
  return out;
}

// ---------------------------------------------------------------------------
// Toy feature stack.

inline constexpr std::array<std::size_t, 4> kPyramidStrides = {32, 16, 8, 4};

/// Input channels (h x w each) plus clicks -> seeded random projections.
/// The click disks are re-encoded at each scale with the radius scaled by the
/// resolution ratio (minimum 1).
inline FeaturePyramid build_pyramid(const std::vector<Field>& channels,
                                    std::span<const ClickRecord> clicks, std::size_t dim, Seed seed,
                                    double click_radius = kDefaultClickRadius) {
  require(!channels.empty(), "build_pyramid: need at least one input channel");
  const std::size_t H = channels.front().height(), W = channels.front().width();
  for (const auto& c : channels) require_same_shape(c, channels.front(), "build_pyramid");
  const std::size_t c_in = channels.size() + 2;

  Rng rng = Rng(seed, Stream::attention).split(0x50595200);
  const double bound = 1.0 / std::sqrt(static_cast<double>(c_in));

  auto make_scale = [&](std::size_t stride) {
    const std::size_t h = std::max<std::size_t>(1, (H + stride - 1) / stride);
    const std::size_t w = std::max<std::size_t>(1, (W + stride - 1) / stride);
    std::vector<ClickRecord> scaled(clicks.begin(), clicks.end());
    for (auto& c : scaled) {
      c.row = std::min(h - 1, c.row * h / H);
      c.col = std::min(w - 1, c.col * w / W);
    }
    const double r = std::max(1.0, std::round(click_radius * static_cast<double>(h) / H));
    const ClickMaps cm = encode_clicks(scaled, h, w, r);

    Matrix in(h * w, c_in);
    for (std::size_t r0 = 0; r0 < h; ++r0)
      for (std::size_t c0 = 0; c0 < w; ++c0) {
        const std::size_t rb = r0 * H / h, re = std::max(rb + 1, (r0 + 1) * H / h);
        const std::size_t cb = c0 * W / w, ce = std::max(cb + 1, (c0 + 1) * W / w);
        for (std::size_t ch = 0; ch < channels.size(); ++ch) {
          double acc = 0.0;
          for (std::size_t rr = rb; rr < re; ++rr)
            for (std::size_t cc = cb; cc < ce; ++cc) acc += channels[ch].at(rr, cc);
          in(r0 * w + c0, ch) = acc / static_cast<double>((re - rb) * (ce - cb));
        }
        in(r0 * w + c0, channels.size()) = cm.positive.at(r0, c0);
        in(r0 * w + c0, channels.size() + 1) = cm.negative.at(r0, c0);
      }

    ScaleFeatures s;
    s.h = h;
    s.w = w;
    s.features = linalg::matmul(in, linalg::uniform(rng, c_in, dim, bound));
    std::vector<double> cmap(h * w);
    for (std::size_t i = 0; i < h * w; ++i)
      cmap[i] = cm.positive[i] > 0.0 ? 1.0 : (cm.negative[i] > 0.0 ? -1.0 : 0.0);
    s.click_map = Field(h, w, std::move(cmap));
    return s;
  };

  FeaturePyramid p;
  for (std::size_t k = 0; k < 3; ++k) p.scales[k] = make_scale(kPyramidStrides[k]);
  p.pixel = make_scale(kPyramidStrides[3]);
  return p;
}

}  // namespace iseg
