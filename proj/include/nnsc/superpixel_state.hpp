#pragma once

/**
 * @file superpixel_state.hpp
 * @brief Superpixel accumulators, grid initialization, incremental label
 *        moves and the connectivity post-process.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "nnsc/error.hpp"
#include "nnsc/image.hpp"

namespace nnsc {

/// Colors are accumulated in fixed point so that incremental updates are
/// exactly reversible and match a batch recomputation bit for bit.
inline constexpr double kColorScale = 65536.0;

inline std::int64_t to_fixed(float v) noexcept {
  return static_cast<std::int64_t>(std::llround(static_cast<double>(v) * kColorScale));
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct SuperpixelStats {
  std::int32_t label = 0;
  std::int64_t size = 0;
  std::array<std::int64_t, 3> color_sum{};
  std::array<__int128, 3> color_sq_sum{};
  std::int64_t x_sum = 0;
  std::int64_t y_sum = 0;

  double mean_color(int channel) const noexcept {
    return static_cast<double>(color_sum[channel]) / kColorScale / static_cast<double>(size);
  }
  Point2 barycenter() const noexcept {
    return {static_cast<double>(x_sum) / static_cast<double>(size),
            static_cast<double>(y_sum) / static_cast<double>(size)};
  }
  /// Color standard deviation, root of the channel-averaged variance.
  double color_stddev(int channels) const noexcept {
    if (size == 0) return 0.0;
    double var = 0.0;
    for (int c = 0; c < channels; ++c) {
      const double mean = static_cast<double>(color_sum[c]) / static_cast<double>(size);
      const double sq = static_cast<double>(color_sq_sum[c]) / static_cast<double>(size);
      var += std::max(0.0, sq - mean * mean);
    }
    return std::sqrt(var / channels) / kColorScale;
  }

  friend bool operator==(const SuperpixelStats&, const SuperpixelStats&) = default;
};

/// How the per-superpixel regularity weight m_k is chosen.
struct Regularity {
  double m0 = 10.0;
  bool adaptive = false;
  double sigma_ref = 10.0;

  /// Constant m0, or m0 * clamp(sigma_ref / sigma_c, 0.5, 2) in adaptive mode
  /// (smoother superpixels get a stronger spatial pull).
  double weight(const SuperpixelStats& s, int channels) const noexcept {
    if (!adaptive) return m0;
    const double sigma = s.color_stddev(channels);
    if (sigma <= 0.0) return 2.0 * m0;
    return m0 * std::clamp(sigma_ref / sigma, 0.5, 2.0);
  }
};

struct GridConfig {
  int requested = 0;  ///< K
  int step = 1;       ///< s
  int columns = 0;
  int rows = 0;

  int count() const noexcept { return columns * rows; }
};

/// s = max(1, round(sqrt(|I| / K))), ties to even.
inline GridConfig make_grid_config(int width, int height, int k) {
  const auto pixels = static_cast<std::int64_t>(width) * height;
  if (k < 1 || k > pixels)
    throw InputError("superpixel count K=" + std::to_string(k) + " outside [1, " +
                     std::to_string(pixels) + "]");
  GridConfig g;
  g.requested = k;
  g.step = std::max(1, static_cast<int>(std::nearbyint(std::sqrt(static_cast<double>(pixels) / k))));
  g.columns = (width + g.step - 1) / g.step;
  g.rows = (height + g.step - 1) / g.step;
  return g;
}

inline LabelMap grid_labels(int width, int height, const GridConfig& grid) {
  LabelMap map(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      map.at(x, y) = (y / grid.step) * grid.columns + x / grid.step;
  return map;
}

inline void accumulate(SuperpixelStats& s, const LabImage& image, int x, int y, int sign) {
  s.size += sign;
  s.x_sum += sign * x;
  s.y_sum += sign * y;
  for (int c = 0; c < image.channels(); ++c) {
    const std::int64_t v = to_fixed(image.at(x, y, c));
    s.color_sum[c] += sign * v;
    s.color_sq_sum[c] += static_cast<__int128>(sign) * v * v;
  }
}

/// Full-pass statistics for labels 0..map.label_count()-1.
inline std::vector<SuperpixelStats> recompute_stats(const LabImage& image, const LabelMap& map) {
  if (image.width() != map.width() || image.height() != map.height())
    throw InputError("recompute_stats: image and label map dimensions differ");
  std::vector<SuperpixelStats> stats(static_cast<std::size_t>(map.label_count()));
  for (std::size_t i = 0; i < stats.size(); ++i) stats[i].label = static_cast<std::int32_t>(i);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) accumulate(stats[map.at(x, y)], image, x, y, +1);
  return stats;
}

/// Label map plus live statistics of one clustering run.
class SuperpixelState {
 public:
  SuperpixelState(const LabImage& image, LabelMap map)
      : image_(&image), map_(std::move(map)), stats_(recompute_stats(image, map_)) {}

  const LabelMap& map() const noexcept { return map_; }
  const std::vector<SuperpixelStats>& stats() const noexcept { return stats_; }
  const SuperpixelStats& stats(std::int32_t label) const { return stats_[label]; }
  std::int32_t label_at(PixelPos p) const { return map_.at(p); }
  const LabImage& image() const noexcept { return *image_; }

  /// Reassigns p from `from` to `to`. Returns false, leaving the state
  /// untouched, when the move would empty `from`.
  bool move_pixel(PixelPos p, std::int32_t from, std::int32_t to) {
    if (map_.at(p) != from)
      throw InvariantError("move_pixel: pixel label " + std::to_string(map_.at(p)) +
                           " != from_label " + std::to_string(from));
    if (from == to) throw InvariantError("move_pixel: from_label == to_label");
    if (to < 0 || static_cast<std::size_t>(to) >= stats_.size())
      throw InvariantError("move_pixel: unknown to_label " + std::to_string(to));
    if (stats_[from].size <= 1) return false;
    accumulate(stats_[from], *image_, p.x, p.y, -1);
    accumulate(stats_[to], *image_, p.x, p.y, +1);
    map_.at(p) = to;
    return true;
  }

 private:
  const LabImage* image_;
  LabelMap map_;
  std::vector<SuperpixelStats> stats_;
};

struct GridInit {
  SuperpixelState state;
  GridConfig grid;
};

/// Regular s x s tiling; the last row and column of blocks may be narrower.
inline GridInit init_grid(const LabImage& image, int k) {
  const GridConfig grid = make_grid_config(image.width(), image.height(), k);
  return {SuperpixelState(image, grid_labels(image.width(), image.height(), grid)), grid};
}

/// Splits every label into its 4-connected components, folds components
/// smaller than min_size into their largest adjacent neighbor (ties: smallest
/// label) and renumbers densely in raster order of first appearance.
inline LabelMap enforce_connectivity(const LabelMap& map, std::int64_t min_size) {
  const int w = map.width();
  const int h = map.height();
  const std::size_t total = map.size();

  std::vector<std::int32_t> comp(total, -1);
  std::vector<std::int64_t> size;
  std::vector<std::int32_t> label;
  std::vector<std::size_t> first;
  std::vector<std::size_t> queue;
  queue.reserve(total);
  for (std::size_t start = 0; start < total; ++start) {
    if (comp[start] >= 0) continue;
    const auto id = static_cast<std::int32_t>(size.size());
    const std::int32_t l = map[start];
    queue.clear();
    queue.push_back(start);
    comp[start] = id;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t i = queue[head];
      const int x = static_cast<int>(i % w);
      const int y = static_cast<int>(i / w);
      auto visit = [&](std::size_t j) {
        if (comp[j] < 0 && map[j] == l) {
          comp[j] = id;
          queue.push_back(j);
        }
      };
      if (x > 0) visit(i - 1);
      if (x + 1 < w) visit(i + 1);
      if (y > 0) visit(i - w);
      if (y + 1 < h) visit(i + w);
    }
    size.push_back(static_cast<std::int64_t>(queue.size()));
    label.push_back(l);
    first.push_back(start);
  }

  const std::size_t count = size.size();
  std::vector<std::vector<std::int32_t>> adjacent(count);
  auto link = [&](std::int32_t a, std::int32_t b) {
    if (a == b) return;
    adjacent[a].push_back(b);
    adjacent[b].push_back(a);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (x + 1 < w) link(comp[i], comp[i + 1]);
      if (y + 1 < h) link(comp[i], comp[i + w]);
    }
  }
  for (auto& a : adjacent) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }

  std::vector<std::int32_t> parent(count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::int32_t c) {
    while (parent[c] != c) {
      parent[c] = parent[parent[c]];
      c = parent[c];
    }
    return c;
  };
  // Group adjacency lists are merged lazily into the surviving root.
  std::vector<std::int32_t> order;
  for (std::size_t c = 0; c < count; ++c)
    if (size[c] < min_size) order.push_back(static_cast<std::int32_t>(c));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int32_t a, std::int32_t b) { return size[a] < size[b]; });

  for (const std::int32_t c : order) {
    if (find(c) != c || size[c] >= min_size) continue;
    std::int32_t best = -1;
    for (const std::int32_t n : adjacent[c]) {
      const std::int32_t r = find(n);
      if (r == c) continue;
      if (best < 0 || size[r] > size[best] || (size[r] == size[best] && label[r] < label[best]) ||
          (size[r] == size[best] && label[r] == label[best] && r < best))
        best = r;
    }
    if (best < 0) continue;
    parent[c] = best;
    size[best] += size[c];
    auto& dst = adjacent[best];
    dst.insert(dst.end(), adjacent[c].begin(), adjacent[c].end());
    std::sort(dst.begin(), dst.end());
    dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
    adjacent[c].clear();
  }

  std::vector<std::int32_t> dense(count, -1);
  std::int32_t next = 0;
  LabelMap out(w, h);
  for (std::size_t i = 0; i < total; ++i) {
    const std::int32_t r = find(comp[i]);
    if (dense[r] < 0) dense[r] = next++;
    out[i] = dense[r];
  }
  return out;
}

/// Default orphan threshold: a quarter of the grid block area.
inline std::int64_t default_min_size(int step) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(step) * step / 4);
}

}  // namespace nnsc
