// Click records and their disk encoding.
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "iseg/core.hpp"

namespace iseg {

struct ClickRecord {
  std::size_t row = 0;
  std::size_t col = 0;
  bool positive = true;
  std::size_t index = 1;  // ordinal, starting at 1

  friend bool operator==(const ClickRecord&, const ClickRecord&) = default;
};

inline constexpr double kDefaultClickRadius = 5.0;

struct ClickMaps {
  ProbMap positive;
  ProbMap negative;
};

/// 1 inside an open disk of `radius` around each click of matching polarity,
/// 0 elsewhere. A radius of 1 marks only the clicked pixel.
inline ClickMaps encode_clicks(std::span<const ClickRecord> clicks, std::size_t h, std::size_t w,
                               double radius = kDefaultClickRadius) {
  require(radius >= 1.0, "encode_clicks: radius must be >= 1");
  std::vector<double> pos(h * w, 0.0), neg(h * w, 0.0);
  const double r2 = radius * radius;
  const auto reach = static_cast<std::ptrdiff_t>(radius);
  for (const auto& c : clicks) {
    if (c.row >= h || c.col >= w)
      throw ParameterError("encode_clicks: click (" + std::to_string(c.row) + ", " +
                           std::to_string(c.col) + ") outside " + std::to_string(h) + "x" +
                           std::to_string(w));
    auto& dst = c.positive ? pos : neg;
    const auto r0 = static_cast<std::ptrdiff_t>(c.row), c0 = static_cast<std::ptrdiff_t>(c.col);
    for (std::ptrdiff_t dr = -reach; dr <= reach; ++dr) {
      for (std::ptrdiff_t dc = -reach; dc <= reach; ++dc) {
        const std::ptrdiff_t r = r0 + dr, cc = c0 + dc;
        if (r < 0 || cc < 0 || r >= static_cast<std::ptrdiff_t>(h) ||
            cc >= static_cast<std::ptrdiff_t>(w))
          continue;
        if (static_cast<double>(dr * dr + dc * dc) < r2)
          dst[static_cast<std::size_t>(r) * w + static_cast<std::size_t>(cc)] = 1.0;
      }
    }
  }
  return {ProbMap(h, w, std::move(pos)), ProbMap(h, w, std::move(neg))};
}

}  // namespace iseg
