#pragma once

#include <cstdint>
#include <queue>
#include <vector>

#include "nnsc/image.hpp"
#include "nnsc/rng.hpp"

namespace testing_support {

inline nnsc::LabImage random_image(int w, int h, int channels, std::uint64_t seed) {
  nnsc::LabImage img(w, h, channels);
  nnsc::Rng rng(seed);
  for (auto& v : img.data()) v = static_cast<float>(rng.uniform() * 100.0);
  return img;
}

inline nnsc::LabImage constant_image(int w, int h, int channels, float value) {
  nnsc::LabImage img(w, h, channels);
  for (auto& v : img.data()) v = value;
  return img;
}

/// Left half at `left`, right half at `right`, single channel.
inline nnsc::LabImage two_level_image(int w, int h, float left, float right) {
  nnsc::LabImage img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = x < w / 2 ? left : right;
  return img;
}

/// Number of 4-connected components of each label, by breadth-first fill.
inline std::vector<int> components_per_label(const nnsc::LabelMap& map) {
  const int w = map.width();
  const int h = map.height();
  std::vector<int> count(static_cast<std::size_t>(map.label_count()), 0);
  std::vector<char> seen(map.size(), 0);
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (seen[static_cast<std::size_t>(y0) * w + x0]) continue;
      const auto label = map.at(x0, y0);
      ++count[label];
      std::queue<nnsc::PixelPos> q;
      q.push({x0, y0});
      seen[static_cast<std::size_t>(y0) * w + x0] = 1;
      while (!q.empty()) {
        const auto p = q.front();
        q.pop();
        const nnsc::PixelPos nbrs[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
        for (auto n : nbrs) {
          if (n.x < 0 || n.y < 0 || n.x >= w || n.y >= h) continue;
          const auto i = static_cast<std::size_t>(n.y) * w + n.x;
          if (seen[i] || map.at(n) != label) continue;
          seen[i] = 1;
          q.push(n);
        }
      }
    }
  }
  return count;
}

/// 4-connected component id of every pixel (ids in raster order).
inline std::vector<int> component_ids(const nnsc::LabelMap& map, int* count = nullptr) {
  const int w = map.width();
  const int h = map.height();
  std::vector<int> id(map.size(), -1);
  int next = 0;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (id[static_cast<std::size_t>(y0) * w + x0] >= 0) continue;
      std::vector<nnsc::PixelPos> stack{{x0, y0}};
      id[static_cast<std::size_t>(y0) * w + x0] = next;
      while (!stack.empty()) {
        const auto p = stack.back();
        stack.pop_back();
        const nnsc::PixelPos nbrs[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
        for (auto n : nbrs) {
          if (n.x < 0 || n.y < 0 || n.x >= w || n.y >= h) continue;
          const auto i = static_cast<std::size_t>(n.y) * w + n.x;
          if (id[i] >= 0 || map.at(n) != map.at(p)) continue;
          id[i] = next;
          stack.push_back(n);
        }
      }
      ++next;
    }
  }
  if (count) *count = next;
  return id;
}

/// Every label in [0, label_count) is present and forms one component.
inline bool is_connected_dense(const nnsc::LabelMap& map) {
  for (int c : components_per_label(map))
    if (c != 1) return false;
  return true;
}

}  // namespace testing_support
