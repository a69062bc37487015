// Dense pixel fields, P_t computation, IoU, binarization and the seeded
// PRNG used throughout the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace iseg {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of paired inputs disagree, or a field is empty.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter is outside its documented range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An input lies outside the region where an approximation is meaningful.
class DomainError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ParameterError(what);
}

// ---------------------------------------------------------------------------
// Grid: row-major H x W field. The tag chooses the element invariant so that
// ProbMap, PtMap and BinaryMask are distinct types.

struct AnyValue {
  template <class T>
  static constexpr bool valid(T) { return true; }
  static constexpr const char* name = "field";
};

struct UnitInterval {
  static bool valid(double v) { return v >= 0.0 && v <= 1.0; }
  static constexpr const char* name = "probability map";
};

struct Confidence {
  static bool valid(double v) { return v > 0.0 && v <= 1.0; }
  static constexpr const char* name = "pt map";
};

struct Binary {
  static constexpr bool valid(std::uint8_t v) { return v == 0 || v == 1; }
  static constexpr const char* name = "binary mask";
};

template <class T, class Tag>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width), values_(height * width, fill) {
    check_shape();
    check_values();
  }

  Grid(std::size_t height, std::size_t width, std::vector<T> values)
      : height_(height), width_(width), values_(std::move(values)) {
    check_shape();
    if (values_.size() != height_ * width_)
      throw DimensionError(std::string(Tag::name) + ": expected " +
                           std::to_string(height_ * width_) + " values, got " +
                           std::to_string(values_.size()));
    check_values();
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T operator[](std::size_t i) const { return values_[i]; }
  T at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }

  /// Writes are validated so the tag invariant always holds.
  void set(std::size_t i, T v) {
    if (!Tag::valid(v))
      throw ParameterError(std::string(Tag::name) + ": invalid element value");
    values_[i] = v;
  }
  void set(std::size_t row, std::size_t col, T v) { set(row * width_ + col, v); }

  std::span<const T> values() const { return values_; }

  template <class OtherT, class OtherTag>
  bool same_shape(const Grid<OtherT, OtherTag>& o) const {
    return height_ == o.height() && width_ == o.width();
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.values_ == b.values_;
  }

 private:
  void check_shape() const {
    if (height_ == 0 || width_ == 0)
      throw DimensionError(std::string(Tag::name) + ": height and width must be >= 1");
  }
  void check_values() const {
    for (T v : values_)
      if (!Tag::valid(v))
        throw ParameterError(std::string(Tag::name) + ": element out of range");
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> values_;
};

using BinaryMask = Grid<std::uint8_t, Binary>;
using ProbMap = Grid<double, UnitInterval>;
using PtMap = Grid<double, Confidence>;
/// Unconstrained real field (gradients, logits, diagnostics).
using Field = Grid<double, AnyValue>;

template <class A, class B>
void require_same_shape(const A& a, const B& b, const char* where) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(where) + ": shape mismatch (" +
                         std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                         " vs " + std::to_string(b.height()) + "x" +
                         std::to_string(b.width()) + ")");
}

inline std::size_t count_ones(const BinaryMask& m) {
  std::size_t n = 0;
  for (auto v : m.values()) n += v;
  return n;
}

inline ProbMap to_prob(const BinaryMask& m) {
  std::vector<double> v(m.values().begin(), m.values().end());
  return ProbMap(m.height(), m.width(), std::move(v));
}

// ---------------------------------------------------------------------------
// P_t, IoU, binarization

inline constexpr double kDefaultEpsClip = 1e-7;

inline void check_eps_clip(double eps) {
  if (!(eps > 0.0 && eps <= 1e-3))
    throw ParameterError("eps_clip must lie in (0, 1e-3], got " + std::to_string(eps));
}

/// Unclamped confidence for one pixel: p on foreground, 1 - p on background.
inline double raw_pt(double p, std::uint8_t y) { return y ? p : 1.0 - p; }

/// d(pt)/dp for one pixel; zero where the clamp is active.
inline double pt_slope(double p, std::uint8_t y, double eps) {
  if (raw_pt(p, y) < eps) return 0.0;
  return y ? 1.0 : -1.0;
}

inline PtMap pt_map(const ProbMap& pred, const BinaryMask& gt,
                    double eps_clip = kDefaultEpsClip) {
  require_same_shape(pred, gt, "pt_map");
  check_eps_clip(eps_clip);
  std::vector<double> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    out[i] = std::max(raw_pt(pred[i], gt[i]), eps_clip);
  return PtMap(pred.height(), pred.width(), std::move(out));
}

/// Intersection over union; two empty masks agree perfectly.
inline double iou(const BinaryMask& pred_mask, const BinaryMask& gt) {
  require_same_shape(pred_mask, gt, "iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    inter += pred_mask[i] & gt[i];
    uni += pred_mask[i] | gt[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Inclusive threshold: p >= threshold maps to 1.
inline BinaryMask binarize(const ProbMap& pred, double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ParameterError("binarize: threshold must lie in (0, 1)");
  std::vector<std::uint8_t> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) out[i] = pred[i] >= threshold ? 1 : 0;
  return BinaryMask(pred.height(), pred.width(), std::move(out));
}

// ---------------------------------------------------------------------------
// Deterministic PRNG
//
// Counter-based: draw k of a stream is splitmix64(key + k * golden), where
// key = splitmix64(seed ^ splitmix64(stream)). Every module draws from its own
// stream id (see Stream), and sub-streams are derived with Rng::split, so the
// output of one module never depends on how many numbers another consumed.

struct Seed {
  std::uint64_t value = 0;
};

enum class Stream : std::uint64_t {
  synthgen = 0x53594e54,   // "SYNT"
  attention = 0x4154544e,  // "ATTN"
  clicksim = 0x434c4943,   // "CLIC"
  trainer = 0x5452414e,    // "TRAN"
  gradcheck = 0x47524144,  // "GRAD"
  matching = 0x4d415443,   // "MATC"
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  Rng(Seed seed, Stream stream) : Rng(seed.value, static_cast<std::uint64_t>(stream)) {}
  Rng(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64(seed ^ splitmix64(stream))) {}

  /// Independent child stream, e.g. one per sample or per test case.
  Rng split(std::uint64_t id) const { return Rng(key_, id + 1); }

  std::uint64_t next_u64() { return splitmix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Uses rejection to stay unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ParameterError("Rng::below: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do x = next_u64();
    while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (one value per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace iseg
