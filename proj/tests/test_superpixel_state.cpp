#include <gtest/gtest.h>

#include <map>
#include <set>

#include "nnsc/superpixel_state.hpp"
#include "support.hpp"

using namespace nnsc;
using testing_support::components_per_label;
using testing_support::is_connected_dense;
using testing_support::random_image;

TEST(Grid, FourByFourIntoFour) {
  const auto img = random_image(4, 4, 1, 1);
  auto [state, grid] = init_grid(img, 4);
  EXPECT_EQ(grid.step, 2);
  EXPECT_EQ(grid.count(), 4);
  const std::vector<std::int32_t> expected = {0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3};
  EXPECT_EQ(state.map(), LabelMap(4, 4, expected));
  for (const auto& s : state.stats()) EXPECT_EQ(s.size, 4);
}

TEST(Grid, StepFromPixelCount) {
  const auto g = make_grid_config(321, 481, 200);
  EXPECT_EQ(g.step, 28);  // sqrt(154401 / 200) = 27.78
  EXPECT_EQ(g.count(), 12 * 18);
}

TEST(Grid, RaggedBlocks) {
  const auto img = random_image(5, 5, 3, 2);
  auto [state, grid] = init_grid(img, 4);
  EXPECT_EQ(grid.step, 2);
  ASSERT_EQ(grid.count(), 9);
  const std::int64_t sizes[9] = {4, 4, 2, 4, 4, 2, 2, 2, 1};
  for (int l = 0; l < 9; ++l) EXPECT_EQ(state.stats(l).size, sizes[l]) << "label " << l;
  // Enumerate members of every block directly and compare sums.
  for (int l = 0; l < 9; ++l) {
    const int bx = l % 3, by = l / 3;
    std::int64_t xs = 0, ys = 0;
    for (int y = 2 * by; y < std::min(5, 2 * by + 2); ++y)
      for (int x = 2 * bx; x < std::min(5, 2 * bx + 2); ++x) {
        EXPECT_EQ(state.map().at(x, y), l);
        xs += x;
        ys += y;
      }
    EXPECT_EQ(state.stats(l).x_sum, xs);
    EXPECT_EQ(state.stats(l).y_sum, ys);
  }
  EXPECT_EQ(state.stats(), recompute_stats(img, state.map()));
}

TEST(Grid, RejectsBadK) {
  const auto img = random_image(4, 4, 1, 3);
  EXPECT_THROW(init_grid(img, 0), InputError);
  EXPECT_THROW(init_grid(img, 17), InputError);
}

TEST(Stats, ConstantImageMeans) {
  const auto img = testing_support::constant_image(12, 9, 3, 37.5f);
  auto [state, grid] = init_grid(img, 6);
  for (const auto& s : state.stats())
    for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(s.mean_color(c), 37.5);
}

TEST(MovePixel, MoveAndBackIsIdentity) {
  const auto img = random_image(8, 8, 3, 4);
  auto [state, grid] = init_grid(img, 4);
  const auto before = state.stats();
  ASSERT_TRUE(state.move_pixel({3, 3}, 0, 1));
  EXPECT_EQ(state.map().at(3, 3), 1);
  ASSERT_TRUE(state.move_pixel({3, 3}, 1, 0));
  EXPECT_EQ(state.stats(), before);
}

TEST(MovePixel, RandomSequenceMatchesRecompute) {
  const auto img = random_image(20, 16, 3, 5);
  auto [state, grid] = init_grid(img, 20);
  Rng rng(6);
  const int labels = grid.count();
  int accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    const PixelPos p{rng.between(0, 19), rng.between(0, 15)};
    const auto from = state.label_at(p);
    auto to = static_cast<std::int32_t>(rng.below(labels - 1));
    if (to >= from) ++to;
    accepted += state.move_pixel(p, from, to);
  }
  EXPECT_GT(accepted, 900);
  EXPECT_EQ(state.stats(), recompute_stats(img, state.map()));
  std::int64_t total = 0;
  for (const auto& s : state.stats()) total += s.size;
  EXPECT_EQ(total, 20 * 16);
}

TEST(MovePixel, RefusesToEmptySource) {
  const auto img = random_image(5, 5, 1, 7);
  auto [state, grid] = init_grid(img, 4);
  const auto map_before = state.map();
  const auto stats_before = state.stats();
  EXPECT_FALSE(state.move_pixel({4, 4}, 8, 7));  // label 8 is the 1x1 corner block
  EXPECT_EQ(state.map(), map_before);
  EXPECT_EQ(state.stats(), stats_before);
}

TEST(MovePixel, LabelMismatchIsInvariantViolation) {
  const auto img = random_image(4, 4, 1, 8);
  auto [state, grid] = init_grid(img, 4);
  EXPECT_THROW(state.move_pixel({0, 0}, 1, 2), InvariantError);
  EXPECT_THROW(state.move_pixel({0, 0}, 0, 0), InvariantError);
  EXPECT_THROW(state.move_pixel({0, 0}, 0, 99), InvariantError);
}

TEST(Connectivity, GridUnchanged) {
  const auto map = grid_labels(12, 9, make_grid_config(12, 9, 12));
  EXPECT_EQ(enforce_connectivity(map, 9), map);
}

TEST(Connectivity, IsolatedPixelAbsorbed) {
  LabelMap map(5, 5, 1);
  map.at(2, 2) = 0;
  const auto out = enforce_connectivity(map, 2);
  EXPECT_EQ(out, LabelMap(5, 5, 0));
}

TEST(Connectivity, SplitLabelBecomesTwoSuperpixels) {
  // Label 0 occupies both outer columns, label 1 the middle.
  LabelMap map(6, 4, 0);
  for (int y = 0; y < 4; ++y)
    for (int x = 2; x < 4; ++x) map.at(x, y) = 1;
  const auto out = enforce_connectivity(map, 1);
  EXPECT_EQ(out.label_count(), 3);
  EXPECT_TRUE(is_connected_dense(out));
}

TEST(Connectivity, RandomMapsAgainstFloodFill) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    LabelMap map(16, 16);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) map.at(x, y) = static_cast<std::int32_t>(rng.below(4));
    const std::int64_t min_size = 1 + trial % 6;
    const auto out = enforce_connectivity(map, min_size);
    ASSERT_TRUE(is_connected_dense(out));

    // No superpixel stays below min_size unless it covers the image.
    std::map<std::int32_t, std::int64_t> sizes;
    for (auto l : out.labels()) ++sizes[l];
    if (sizes.size() > 1) {
      for (const auto& [l, n] : sizes) EXPECT_GE(n, min_size) << "trial " << trial;
    }
    // Input components are never split.
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        if (x + 1 < 16 && map.at(x, y) == map.at(x + 1, y)) {
          EXPECT_EQ(out.at(x, y), out.at(x + 1, y));
        }
        if (y + 1 < 16 && map.at(x, y) == map.at(x, y + 1)) {
          EXPECT_EQ(out.at(x, y), out.at(x, y + 1));
        }
      }
    }

    // Absorbed components take a label found right next to them.
    int count = 0;
    const auto comp = testing_support::component_ids(map, &count);
    std::vector<std::int64_t> comp_size(count, 0);
    for (int c : comp) ++comp_size[c];
    std::vector<bool> touches(count, false);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        const PixelPos nbrs[4] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (auto n : nbrs) {
          if (n.x < 0 || n.y < 0 || n.x >= 16 || n.y >= 16) continue;
          if (comp[n.y * 16 + n.x] != comp[y * 16 + x] && out.at(n) == out.at(x, y))
            touches[comp[y * 16 + x]] = true;
        }
      }
    for (int c = 0; c < count; ++c) {
      if (comp_size[c] < min_size && count > 1) {
        EXPECT_TRUE(touches[c]) << "trial " << trial;
      }
    }
  }
}

TEST(Connectivity, AbsorbsIntoLargestNeighbor) {
  // Small island of label 2 touching a large region 0 and a smaller region 1.
  LabelMap map(8, 4, 0);
  for (int y = 0; y < 4; ++y) map.at(7, y) = 1;
  map.at(6, 1) = 2;
  const auto out = enforce_connectivity(map, 2);
  EXPECT_EQ(out.at(6, 1), out.at(0, 0));
  EXPECT_EQ(out.label_count(), 2);
}

TEST(Connectivity, DenseRelabelInRasterOrder) {
  LabelMap map(3, 1, std::vector<std::int32_t>{7, 3, 3});
  const auto out = enforce_connectivity(map, 1);
  EXPECT_EQ(out, LabelMap(3, 1, std::vector<std::int32_t>{0, 1, 1}));
}

TEST(Connectivity, DefaultMinSize) {
  EXPECT_EQ(default_min_size(28), 196);
  EXPECT_EQ(default_min_size(1), 1);
}
