#pragma once

/**
 * @file synthetic.hpp
 * @brief Procedural composite-texture images with tile ground truth.
 *
 * Textures are oscillations around a mean gray level. With equal_mean set,
 * each tile is re-centered on the common level so that only texture, not
 * intensity, separates the regions.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "nnsc/error.hpp"
#include "nnsc/image.hpp"
#include "nnsc/metrics.hpp"
#include "nnsc/rng.hpp"

namespace nnsc {

enum class TextureKind { Grating, Checkerboard, Noise, Constant };

struct TextureSpec {
  TextureKind kind = TextureKind::Constant;
  double frequency = 0.125;  ///< cycles per pixel
  double orientation = 0.0;  ///< radians
  double mean = 128.0;
  double amplitude = 0.0;
  std::uint64_t noise_seed = 0;
};

/// Tile lattice: columns x rows of (nearly) equal tiles.
struct Layout {
  int columns = 2;
  int rows = 1;

  static constexpr Layout vertical_split() { return {2, 1}; }
  static constexpr Layout tiles_2x2() { return {2, 2}; }
  static constexpr Layout tiles_4x4() { return {4, 4}; }

  int tile_count() const noexcept { return columns * rows; }
  friend constexpr bool operator==(Layout, Layout) = default;
};

struct CompositeOptions {
  Layout layout = Layout::vertical_split();
  bool equal_mean = false;
  /// Internal tile edges sit at i * extent / tiles, displaced by a seeded
  /// uniform draw in [-jitter, jitter] pixels.
  int jitter = 0;
};

struct Composite {
  Raster image;
  GroundTruth truth;
};

inline double texture_value(const TextureSpec& t, int x, int y, Rng& noise) {
  const double u = x * std::cos(t.orientation) + y * std::sin(t.orientation);
  const double v = -x * std::sin(t.orientation) + y * std::cos(t.orientation);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  switch (t.kind) {
    case TextureKind::Grating:
      return t.amplitude * std::sin(two_pi * t.frequency * u);
    case TextureKind::Checkerboard: {
      // Half-period squares; phase offset keeps samples off the zero crossings.
      const double a = std::sin(two_pi * t.frequency * (u + 0.25));
      const double b = std::sin(two_pi * t.frequency * (v + 0.25));
      return (a * b >= 0.0 ? 1.0 : -1.0) * t.amplitude;
    }
    case TextureKind::Noise:
      return t.amplitude * (2.0 * noise.uniform() - 1.0);
    case TextureKind::Constant:
      return 0.0;
  }
  return 0.0;
}

/// Fills a tile lattice with one texture per tile. Region ids follow the
/// tile index in row-major order.
inline Composite generate_composite(int width, int height, const CompositeOptions& options,
                                    const std::vector<TextureSpec>& specs, std::uint64_t seed) {
  if (width < 1 || height < 1) throw InputError("composite: invalid dimensions");
  const int cols = options.layout.columns;
  const int rows = options.layout.rows;
  if (cols < 1 || rows < 1) throw InputError("composite: empty tile layout");
  if (static_cast<int>(specs.size()) != options.layout.tile_count())
    throw InputError("composite: layout needs " + std::to_string(options.layout.tile_count()) +
                     " texture specs, got " + std::to_string(specs.size()));
  if (width < cols || height < rows) throw InputError("composite: image smaller than tile grid");

  if (options.jitter < 0 || 2 * options.jitter >= std::min(width / cols, height / rows))
    throw InputError("composite: jitter must lie in [0, tile size / 2)");

  Rng edge_rng(mix64(seed));
  auto tile_lookup = [&](int extent, int parts) {
    std::vector<int> edges{0};
    for (int i = 1; i < parts; ++i)
      edges.push_back(static_cast<int>(static_cast<std::int64_t>(i) * extent / parts) +
                      (options.jitter ? edge_rng.between(-options.jitter, options.jitter) : 0));
    edges.push_back(extent);
    std::vector<int> tile(static_cast<std::size_t>(extent));
    for (int t = 0; t < parts; ++t)
      for (int c = edges[t]; c < edges[t + 1]; ++c) tile[c] = t;
    return tile;
  };
  const std::vector<int> tile_x = tile_lookup(width, cols);
  const std::vector<int> tile_y = tile_lookup(height, rows);

  std::vector<std::int32_t> regions(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      regions[static_cast<std::size_t>(y) * width + x] = tile_y[y] * cols + tile_x[x];

  double level = 0.0;
  for (const auto& s : specs) level += s.mean;
  level /= static_cast<double>(specs.size());

  std::vector<double> values(regions.size());
  std::vector<double> sums(specs.size(), 0.0);
  std::vector<std::int64_t> counts(specs.size(), 0);
  std::vector<Rng> noise;
  for (std::size_t i = 0; i < specs.size(); ++i)
    noise.emplace_back(mix64(seed ^ mix64(specs[i].noise_seed + i)));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      const auto r = static_cast<std::size_t>(regions[i]);
      values[i] = texture_value(specs[r], x, y, noise[r]);
      sums[r] += values[i];
      ++counts[r];
    }
  }

  Composite out{Raster(width, height, 1), {}};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto r = static_cast<std::size_t>(regions[i]);
    const double v = options.equal_mean ? values[i] - sums[r] / counts[r] + level
                                        : values[i] + specs[r].mean;
    out.image.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  out.truth = GroundTruth(width, height, std::move(regions));
  return out;
}

/// Grating against checkerboard, both with the same mean, alternating over
/// a 4x4 tile lattice with jittered edges. Periods (6 to 10 px) and
/// orientations are drawn from the seed.
inline Composite two_texture_composite(int width, int height, std::uint64_t seed,
                                       double amplitude = 60.0, int jitter = 16) {
  Rng rng(mix64(seed ^ 0x7465787475726573ULL));
  const auto draw = [&](TextureKind kind, std::uint64_t noise_seed) {
    TextureSpec t;
    t.kind = kind;
    t.frequency = 1.0 / rng.between(6, 10);
    t.orientation = rng.uniform() * std::numbers::pi;
    t.amplitude = amplitude;
    t.noise_seed = noise_seed;
    return t;
  };
  const TextureSpec grating = draw(TextureKind::Grating, 1);
  const TextureSpec checker = draw(TextureKind::Checkerboard, 2);
  CompositeOptions options;
  options.layout = Layout::tiles_4x4();
  options.equal_mean = true;
  options.jitter = std::max(0, std::min(jitter, std::min(width, height) / 8 - 1));
  std::vector<TextureSpec> specs;
  for (int i = 0; i < options.layout.tile_count(); ++i)
    specs.push_back((i / 4 + i % 4) % 2 ? checker : grating);
  return generate_composite(width, height, options, specs, seed);
}

}  // namespace nnsc
