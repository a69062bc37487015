// Seeded synthetic segmentation samples.
//
// Each instance is a star-shaped region around a centre: its boundary radius
// as a function of angle comes from the shape kind (disk, ellipse, blob) plus
// optional seeded jitter. Nested specs place a half-scale copy of the first
// instance inside it, so the inner mask is a strict subset of the outer one.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "iseg/core.hpp"

namespace iseg {

class GenerationError : public Error {
 public:
  using Error::Error;
};

enum class ShapeKind { disk, ellipse, blob };

inline std::string_view to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::disk: return "disk";
    case ShapeKind::ellipse: return "ellipse";
    case ShapeKind::blob: return "blob";
  }
  return "?";
}

inline ShapeKind parse_shape_kind(std::string_view s) {
  if (s == "disk") return ShapeKind::disk;
  if (s == "ellipse") return ShapeKind::ellipse;
  if (s == "blob") return ShapeKind::blob;
  throw ParameterError("unknown shape kind '" + std::string(s) + "'");
}

struct SynthSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t n_instances = 1;
  ShapeKind shape_kind = ShapeKind::disk;
  double boundary_noise = 0.0;   // pixels of radial jitter
  bool nesting = false;
  double intensity_noise = 0.05; // half-width of uniform noise on the intensity channel
  Seed seed{};

  void validate() const {
    require(height >= 8 && width >= 8, "SynthSpec: image must be at least 8x8");
    require(n_instances >= 1, "SynthSpec: n_instances must be >= 1");
    require(!nesting || n_instances >= 2, "SynthSpec: nesting needs n_instances >= 2");
    require(boundary_noise >= 0.0, "SynthSpec: boundary_noise must be >= 0");
    require(intensity_noise >= 0.0 && intensity_noise < 0.25,
            "SynthSpec: intensity_noise must lie in [0, 0.25)");
  }
};

inline constexpr std::size_t kFeatureChannels = 4;

/// Placement of one generated instance (centre and base radius in pixels).
struct InstanceInfo {
  double cy = 0.0, cx = 0.0;
  double radius = 0.0;
  double scale = 1.0;  // 0.5 for the inner member of a nested pair
};

struct SynthSample {
  /// (row/H, col/W, distance to image centre, intensity), each H x W.
  std::array<Field, kFeatureChannels> features;
  std::vector<BinaryMask> gt_instances;
  std::vector<InstanceInfo> instances;
  SynthSpec spec;
};

namespace detail {

struct Shape {
  double cy = 0, cx = 0;
  double radius = 0;      // base radius
  double aspect = 1.0;    // ellipse minor/major ratio
  double angle = 0.0;
  std::array<double, 3> harmonics{};  // blob amplitudes for k = 2, 3, 5
  std::array<double, 3> phases{};
  std::array<double, 16> jitter{};    // boundary noise samples around the circle

  // Boundary radius in direction theta, before scaling.
  double boundary(double theta) const {
    double r = radius;
    if (aspect != 1.0) {
      const double t = theta - angle;
      const double a = radius, b = radius * aspect;
      r = a * b / std::hypot(b * std::cos(t), a * std::sin(t));
    }
    constexpr std::array<int, 3> ks = {2, 3, 5};
    for (std::size_t k = 0; k < 3; ++k) r *= 1.0 + harmonics[k] * std::cos(ks[k] * theta + phases[k]);
    // Periodic linear interpolation of the jitter samples.
    const double pos = (theta + std::numbers::pi) / (2.0 * std::numbers::pi) * 16.0;
    const auto i0 = static_cast<std::size_t>(std::floor(pos)) % 16;
    const double f = pos - std::floor(pos);
    r += (1.0 - f) * jitter[i0] + f * jitter[(i0 + 1) % 16];
    return std::max(r, 1.0);
  }

  BinaryMask rasterize(std::size_t h, std::size_t w, double scale = 1.0) const {
    std::vector<std::uint8_t> v(h * w);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        const double dy = static_cast<double>(r) - cy, dx = static_cast<double>(c) - cx;
        const double d = std::hypot(dy, dx);
        v[r * w + c] = d <= scale * boundary(std::atan2(dy, dx)) ? 1 : 0;
      }
    return BinaryMask(h, w, std::move(v));
  }

  double max_extent() const {
    double m = 0.0;
    for (int k = 0; k < 360; ++k) m = std::max(m, boundary(k * std::numbers::pi / 180.0 - std::numbers::pi));
    return m;
  }
};

inline Shape random_shape(Rng& rng, const SynthSpec& spec, double max_radius) {
  Shape s;
  const double lo = std::max(3.0, 0.35 * max_radius);
  s.radius = rng.uniform(lo, std::max(lo, max_radius));
  if (spec.shape_kind == ShapeKind::ellipse) {
    s.aspect = rng.uniform(0.45, 0.85);
    s.angle = rng.uniform(0.0, std::numbers::pi);
  } else if (spec.shape_kind == ShapeKind::blob) {
    for (std::size_t k = 0; k < 3; ++k) {
      s.harmonics[k] = rng.uniform(0.0, 0.12);
      s.phases[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
  }
  if (spec.boundary_noise > 0.0)
    for (double& j : s.jitter) j = rng.uniform(-spec.boundary_noise, spec.boundary_noise);
  return s;
}

}  // namespace detail

/// Deterministic for a given spec. Throws GenerationError when the shapes
/// cannot be placed without overlap after a bounded number of retries.
inline SynthSample generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed, Stream::synthgen);
  const auto H = spec.height, W = spec.width;
  const double short_side = static_cast<double>(std::min(H, W));

  // Nested pairs count as one placed region.
  const std::size_t regions = spec.nesting ? spec.n_instances - 1 : spec.n_instances;
  const double max_radius = std::max(3.0, 0.42 * short_side / std::sqrt(static_cast<double>(regions)));

  SynthSample out;
  out.spec = spec;
  std::vector<std::uint8_t> occupied(H * W, 0);
  std::vector<double> level(H * W, 0.0);

  constexpr int kMaxTries = 200;
  for (std::size_t k = 0; k < regions; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
      detail::Shape s = detail::random_shape(rng, spec, max_radius);
      const double extent = s.max_extent() + 1.0;
      if (2.0 * extent >= short_side) continue;
      if (k == 0 && regions == 1 && spec.boundary_noise == 0.0 &&
          spec.shape_kind == ShapeKind::disk) {
        s.cy = (static_cast<double>(H) - 1.0) / 2.0;
        s.cx = (static_cast<double>(W) - 1.0) / 2.0;
      } else {
        s.cy = rng.uniform(extent, static_cast<double>(H) - 1.0 - extent);
        s.cx = rng.uniform(extent, static_cast<double>(W) - 1.0 - extent);
      }
      BinaryMask m = s.rasterize(H, W);
      bool overlap = false;
      for (std::size_t i = 0; i < m.size() && !overlap; ++i) overlap = m[i] && occupied[i];
      if (overlap || count_ones(m) == 0) continue;

      if (spec.nesting && k == 0) {
        BinaryMask inner = s.rasterize(H, W, 0.5);
        const std::size_t ni = count_ones(inner);
        if (ni == 0 || ni >= count_ones(m)) continue;
        for (std::size_t i = 0; i < m.size(); ++i) {
          occupied[i] |= m[i];
          level[i] = inner[i] ? 1.0 : (m[i] ? 0.5 : level[i]);
        }
        out.gt_instances.push_back(std::move(m));
        out.gt_instances.push_back(std::move(inner));
        out.instances.push_back({s.cy, s.cx, s.radius, 1.0});
        out.instances.push_back({s.cy, s.cx, s.radius, 0.5});
      } else {
        for (std::size_t i = 0; i < m.size(); ++i) {
          occupied[i] |= m[i];
          if (m[i]) level[i] = 1.0;
        }
        out.gt_instances.push_back(std::move(m));
        out.instances.push_back({s.cy, s.cx, s.radius, 1.0});
      }
      placed = true;
    }
    if (!placed)
      throw GenerationError("generate: could not place instance " + std::to_string(k) + " after " +
                            std::to_string(kMaxTries) + " tries");
  }

  std::array<std::vector<double>, kFeatureChannels> ch;
  for (auto& c : ch) c.resize(H * W);
  const double cy = (static_cast<double>(H) - 1.0) / 2.0, cx = (static_cast<double>(W) - 1.0) / 2.0;
  const double norm = std::hypot(cy, cx);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) {
      const std::size_t i = r * W + c;
      ch[0][i] = static_cast<double>(r) / static_cast<double>(H);
      ch[1][i] = static_cast<double>(c) / static_cast<double>(W);
      ch[2][i] = std::hypot(static_cast<double>(r) - cy, static_cast<double>(c) - cx) / norm;
      ch[3][i] = level[i] + rng.uniform(-spec.intensity_noise, spec.intensity_noise);
    }
  for (std::size_t k = 0; k < kFeatureChannels; ++k) out.features[k] = Field(H, W, std::move(ch[k]));
  return out;
}

struct DifficultyProfile {
  static constexpr std::size_t kBins = 20;
  std::array<std::size_t, kBins> foreground{};
  std::array<std::size_t, kBins> background{};

  std::size_t total() const {
    std::size_t n = 0;
    for (std::size_t b = 0; b < kBins; ++b) n += foreground[b] + background[b];
    return n;
  }
};

/// 20-bin histogram of pt over the image, split by ground-truth class.
/// Bin b covers [b/20, (b+1)/20); pt = 1 falls in the top bin.
inline DifficultyProfile difficulty_profile(const SynthSample& sample, const ProbMap& pred,
                                            std::size_t instance = 0,
                                            double eps = kDefaultEpsClip) {
  if (instance >= sample.gt_instances.size())
    throw ParameterError("difficulty_profile: instance index out of range");
  const BinaryMask& gt = sample.gt_instances[instance];
  const PtMap pt = pt_map(pred, gt, eps);
  DifficultyProfile prof;
  for (std::size_t i = 0; i < pt.size(); ++i) {
    const auto bin = std::min<std::size_t>(DifficultyProfile::kBins - 1,
                                           static_cast<std::size_t>(pt[i] * DifficultyProfile::kBins));
    (gt[i] ? prof.foreground : prof.background)[bin]++;
  }
  return prof;
}

inline std::vector<Field> feature_channels(const SynthSample& s) {
  return {s.features.begin(), s.features.end()};
}

}  // namespace iseg
