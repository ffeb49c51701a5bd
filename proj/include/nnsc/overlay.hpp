#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "nnsc/error.hpp"
#include "nnsc/image.hpp"

namespace nnsc {

inline constexpr std::array<std::uint8_t, 3> kBoundaryColor{255, 0, 0};

/// True when one of the 4-neighbors of (x, y) carries a different label.
inline bool is_boundary(const LabelMap& map, int x, int y) {
  const std::int32_t l = map.at(x, y);
  return (x > 0 && map.at(x - 1, y) != l) || (x + 1 < map.width() && map.at(x + 1, y) != l) ||
         (y > 0 && map.at(x, y - 1) != l) || (y + 1 < map.height() && map.at(x, y + 1) != l);
}

/// RGB copy of the image with superpixel borders painted kBoundaryColor.
inline Raster boundary_overlay(const Raster& image, const LabelMap& map) {
  image.validate();
  if (image.width != map.width() || image.height != map.height())
    throw InputError("overlay: image " + std::to_string(image.width) + "x" +
                     std::to_string(image.height) + " vs label map " + std::to_string(map.width()) +
                     "x" + std::to_string(map.height()));
  Raster out(image.width, image.height, 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const bool edge = is_boundary(map, x, y);
      for (int c = 0; c < 3; ++c)
        out.at(x, y, c) = edge ? kBoundaryColor[c] : image.at(x, y, image.channels == 3 ? c : 0);
    }
  }
  return out;
}

}  // namespace nnsc
