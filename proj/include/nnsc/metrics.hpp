#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "nnsc/error.hpp"
#include "nnsc/image.hpp"

namespace nnsc {

/// Reference region labeling. Every region id below region_count is used.
struct GroundTruth {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> regions;
  std::int32_t region_count = 0;

  GroundTruth() = default;
  GroundTruth(int w, int h, std::vector<std::int32_t> r)
      : width(w), height(h), regions(std::move(r)) {
    if (w < 1 || h < 1 || regions.size() != static_cast<std::size_t>(w) * h)
      throw InputError("ground truth: size does not match dimensions");
    if (std::any_of(regions.begin(), regions.end(), [](auto v) { return v < 0; }))
      throw InputError("ground truth: negative region id");
    region_count = *std::max_element(regions.begin(), regions.end()) + 1;
    std::vector<bool> seen(static_cast<std::size_t>(region_count), false);
    for (auto v : regions) seen[v] = true;
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
      throw InputError("ground truth: region ids are not contiguous");
  }

  /// Region ids are compacted in order of first appearance.
  static GroundTruth from_labels(const LabelMap& map) {
    std::unordered_map<std::int32_t, std::int32_t> ids;
    std::vector<std::int32_t> regions;
    regions.reserve(map.labels().size());
    for (auto v : map.labels())
      regions.push_back(ids.try_emplace(v, static_cast<std::int32_t>(ids.size())).first->second);
    return {map.width(), map.height(), std::move(regions)};
  }
};

/// Achievable segmentation accuracy: fraction of pixels covered when every
/// superpixel is assigned its best-overlapping ground-truth region.
inline double asa(const LabelMap& map, const GroundTruth& gt) {
  if (map.width() != gt.width || map.height() != gt.height)
    throw InputError("asa: label map " + std::to_string(map.width()) + "x" +
                     std::to_string(map.height()) + " vs ground truth " +
                     std::to_string(gt.width) + "x" + std::to_string(gt.height));
  std::unordered_map<std::uint64_t, std::int64_t> overlap;
  const auto labels = map.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint64_t key = (static_cast<std::uint64_t>(labels[i]) << 32) |
                              static_cast<std::uint32_t>(gt.regions[i]);
    ++overlap[key];
  }
  std::unordered_map<std::int32_t, std::int64_t> best;
  for (const auto& [key, count] : overlap) {
    auto& b = best[static_cast<std::int32_t>(key >> 32)];
    b = std::max(b, count);
  }
  std::int64_t covered = 0;
  for (const auto& [label, count] : best) covered += count;
  return static_cast<double>(covered) / static_cast<double>(labels.size());
}

}  // namespace nnsc
