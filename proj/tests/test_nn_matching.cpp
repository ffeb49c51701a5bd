#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "nnsc/patch_match.hpp"
#include "nnsc/synthetic.hpp"
#include "support.hpp"

using namespace nnsc;

namespace {

// Plain patch distance: a fixed cost.
struct PatchCost {
  const PaddedImage* patches;
  double operator()(PixelPos p, PixelPos q) const { return patches->distance(p, q); }
};

// Zero exactly at the offset (2, 0), growing with the offset error.
struct OffsetCost {
  double operator()(PixelPos p, PixelPos q) const {
    return std::abs(q.x - p.x - 2) + std::abs(q.y - p.y);
  }
};

struct ConstantCost {
  double operator()(PixelPos, PixelPos) const { return 1.0; }
};

LabImage texture_image(int side, std::uint64_t seed) {
  return gray_to_lab(two_texture_composite(side, side, seed).image);
}

}  // namespace

TEST(SearchConfig, Validation) {
  EXPECT_THROW((SearchConfig{3, 3, 0, 0.5}.validate()), ConfigError);
  EXPECT_THROW((SearchConfig{3, -1, 0, 0.5}.validate()), ConfigError);
  EXPECT_THROW((SearchConfig{3, 1, 0, 1.0}.validate()), ConfigError);
  EXPECT_NO_THROW((SearchConfig{3, 2, 0, 0.5}.validate()));
}

TEST(RandomSearch, RadiusCount) {
  for (int s : {1, 2, 3, 4, 7, 8, 28, 32, 100})
    EXPECT_EQ(random_search_radius_count(s, 0.5), static_cast<int>(std::floor(std::log2(s))) + 1) << s;
}

TEST(RandomInit, Deterministic) {
  const auto img = testing_support::random_image(24, 20, 3, 1);
  const PaddedImage patches(img, PatchSpec(5));
  PatchMatcher a(24, 20, {4, 1, 99, 0.5}, PatchCost{&patches});
  PatchMatcher b(24, 20, {4, 1, 99, 0.5}, PatchCost{&patches});
  a.random_init();
  b.random_init();
  EXPECT_EQ(a.field(), b.field());
  PatchMatcher c(24, 20, {4, 1, 100, 0.5}, PatchCost{&patches});
  c.random_init();
  EXPECT_NE(a.field().match, c.field().match);
}

TEST(RandomInit, EightNeighborhoodOnTinyImage) {
  std::set<std::pair<int, int>> seen;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    PatchMatcher m(3, 3, {1, 0, seed, 0.5}, ConstantCost{});
    m.random_init();
    const PixelPos q = m.field().match_at({1, 1});
    ASSERT_FALSE(q.x == 1 && q.y == 1);
    ASSERT_TRUE(q.x >= 0 && q.x <= 2 && q.y >= 0 && q.y <= 2);
    seen.insert({q.x, q.y});
    ASSERT_EQ(count_invalid_matches(m.field(), m.config()), 0u);
  }
  EXPECT_EQ(seen.size(), 8u);
}

TEST(RandomInit, Feasibility) {
  const auto img = testing_support::random_image(40, 33, 1, 2);
  const PaddedImage patches(img, PatchSpec(3));
  const SearchConfig cfg{6, 3, 7, 0.5};
  PatchMatcher m(40, 33, cfg, PatchCost{&patches});
  m.random_init();
  for (int y = 0; y < 33; ++y)
    for (int x = 0; x < 40; ++x) {
      const PixelPos q = m.field().match_at({x, y});
      const int d = std::max(std::abs(q.x - x), std::abs(q.y - y));
      EXPECT_GT(d, cfg.sigma);
      EXPECT_LE(d, cfg.step);
    }
  EXPECT_EQ(m.evaluations(), 40u * 33u);
}

TEST(RandomInit, NoFeasibleCandidate) {
  PatchMatcher m(2, 2, {2, 1, 0, 0.5}, ConstantCost{});
  EXPECT_THROW(m.random_init(), ConfigError);
}

TEST(Propagate, SkipsOutOfBoundsShift) {
  PatchMatcher m(8, 8, {3, 1, 5, 0.5}, OffsetCost{});
  m.random_init();
  m.assign({1, 0}, {0, 2});  // shifted to p = (0, 0) this lands at x = -1
  m.assign({0, 0}, {3, 3});
  m.assign({0, 1}, {3, 3});  // shifted: (3, 2), cost 2 + 2 = 3 < 4
  const auto before = m.evaluations();
  const double cost_before = m.field().cost[0];
  m.propagate({0, 0}, false);
  EXPECT_EQ(m.evaluations(), before + 1);
  EXPECT_EQ(m.field().match_at({0, 0}), (PixelPos{3, 2}));
  EXPECT_LT(m.field().cost[0], cost_before);
}

TEST(Propagate, ZeroCostSpreadsAlongScan) {
  PatchMatcher m(10, 4, {3, 1, 8, 0.5}, OffsetCost{});
  m.random_init();
  m.assign({0, 0}, {2, 0});
  ASSERT_EQ(m.field().cost[0], 0.0);
  for (int x = 1; x < 8; ++x) {
    m.propagate({x, 0}, true);
    EXPECT_EQ(m.field().match_at({x, 0}), (PixelPos{x + 2, 0}));
    EXPECT_EQ(m.field().cost[x], 0.0);
  }
}

TEST(Propagate, ImprovesTextureField) {
  const auto img = texture_image(32, 3);
  const PaddedImage patches(img, PatchSpec(7));
  PatchMatcher m(32, 32, {4, 1, 11, 0.5}, PatchCost{&patches});
  m.random_init();
  const auto init = m.field().cost;
  const double init_mean = m.field().mean_cost();
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) m.propagate({x, y}, true);
  EXPECT_LE(m.field().mean_cost(), init_mean);
  for (std::size_t i = 0; i < init.size(); ++i) EXPECT_LE(m.field().cost[i], init[i]);
}

TEST(RandomSearch, ConstantCostKeepsField) {
  PatchMatcher m(16, 16, {4, 1, 3, 0.5}, ConstantCost{});
  m.random_init();
  const auto before = m.field();
  for (int it = 0; it < 3; ++it) m.iterate(it);
  EXPECT_EQ(m.field(), before);
}

TEST(RandomSearch, StaysFeasibleAndNeverWorsens) {
  const auto img = testing_support::random_image(30, 30, 3, 4);
  const PaddedImage patches(img, PatchSpec(5));
  PatchMatcher m(30, 30, {5, 2, 13, 0.5}, PatchCost{&patches});
  m.random_init();
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x) {
      const double before = m.field().cost[m.field().index({x, y})];
      m.random_search({x, y});
      EXPECT_LE(m.field().cost[m.field().index({x, y})], before);
    }
  EXPECT_EQ(count_invalid_matches(m.field(), m.config()), 0u);
}

TEST(Iteration, FrozenCostIsMonotone) {
  const auto img = texture_image(48, 5);
  const PaddedImage patches(img, PatchSpec(7));
  PatchMatcher m(48, 48, {6, 3, 21, 0.5}, PatchCost{&patches});
  m.random_init();
  const auto init = m.field().cost;
  auto previous = init;
  double previous_mean = m.field().mean_cost();
  for (int it = 0; it < 8; ++it) {
    const auto before = m.evaluations();
    m.iterate(it);
    const auto spent = m.evaluations() - before;
    EXPECT_LE(spent, 48u * 48u * (2u + static_cast<unsigned>(m.radius_count())));
    EXPECT_EQ(count_invalid_matches(m.field(), m.config()), 0u);
    for (std::size_t i = 0; i < previous.size(); ++i) {
      ASSERT_LE(m.field().cost[i], previous[i]);
      ASSERT_LE(m.field().cost[i], init[i]);
    }
    EXPECT_LE(m.field().mean_cost(), previous_mean);
    previous = m.field().cost;
    previous_mean = m.field().mean_cost();
  }
}

TEST(Iteration, Deterministic) {
  const auto img = texture_image(40, 6);
  const PaddedImage patches(img, PatchSpec(5));
  auto run = [&] {
    PatchMatcher m(40, 40, {5, 2, 77, 0.5}, PatchCost{&patches});
    m.random_init();
    for (int it = 0; it < 4; ++it) m.iterate(it);
    return m.field();
  };
  EXPECT_EQ(run(), run());
}

TEST(Iteration, HookSeesEveryPixelInScanOrder) {
  PatchMatcher m(5, 4, {2, 0, 1, 0.5}, ConstantCost{});
  m.random_init();
  std::vector<PixelPos> forward, backward;
  m.iterate(0, [&](PixelPos p) { forward.push_back(p); });
  m.iterate(1, [&](PixelPos p) { backward.push_back(p); });
  ASSERT_EQ(forward.size(), 20u);
  ASSERT_EQ(backward.size(), 20u);
  EXPECT_EQ(forward.front(), (PixelPos{0, 0}));
  EXPECT_EQ(forward.back(), (PixelPos{4, 3}));
  EXPECT_EQ(backward.front(), (PixelPos{4, 3}));
  EXPECT_EQ(backward.back(), (PixelPos{0, 0}));
}

TEST(Iteration, ApproachesExactNearestNeighbor) {
  const auto img = texture_image(64, 7);
  const PaddedImage patches(img, PatchSpec(7));
  const SearchConfig cfg{8, 3, 5, 0.5};
  PatchMatcher m(64, 64, cfg, PatchCost{&patches});
  m.random_init();
  for (int it = 0; it < 8; ++it) m.iterate(it);
  int good = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (int qy = std::max(0, y - 8); qy <= std::min(63, y + 8); ++qy)
        for (int qx = std::max(0, x - 8); qx <= std::min(63, x + 8); ++qx)
          if (is_valid_match({x, y}, {qx, qy}, cfg, 64, 64))
            best = std::min(best, patch_distance(img, {x, y}, {qx, qy}, PatchSpec(7)));
      const double found = m.field().cost[m.field().index({x, y})];
      ASSERT_GE(found, best - 1e-4 * std::max(1.0, best));
      good += found <= 1.5 * best + 1e-9;
    }
  EXPECT_GE(good, 0.9 * 64 * 64);
}
