#pragma once

/**
 * @file patch_match.hpp
 * @brief Spatially constrained PatchMatch over a single image.
 *
 * Every pixel p keeps one correspondence q with s >= max(|dx|, |dy|) > sigma
 * (a square search window around p with a square exclusion zone removed).
 * The field is refined by scan-order propagation and a shrinking-radius
 * random search; candidates are accepted only on strict improvement.
 */

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nnsc/error.hpp"
#include "nnsc/image.hpp"
#include "nnsc/rng.hpp"

namespace nnsc {

struct SearchConfig {
  int step = 1;            ///< window half-size s
  int sigma = 0;           ///< Chebyshev exclusion radius
  std::uint64_t seed = 0;
  double alpha = 0.5;      ///< random-search shrink ratio

  void validate() const {
    if (step < 1) throw ConfigError("search: step must be >= 1");
    if (sigma < 0) throw ConfigError("search: sigma must be >= 0");
    if (sigma >= step)
      throw ConfigError("search: exclusion radius sigma=" + std::to_string(sigma) +
                        " leaves no candidate in a window of half-size " + std::to_string(step));
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("search: alpha must lie in (0, 1)");
  }
};

/// Radii s, s*alpha, s*alpha^2, ... that are >= 1.
inline int random_search_radius_count(int step, double alpha) {
  int count = 0;
  for (double r = step; r >= 1.0; r *= alpha) ++count;
  return count;
}

inline bool is_valid_match(PixelPos p, PixelPos q, const SearchConfig& cfg, int width, int height) {
  if (q.x < 0 || q.y < 0 || q.x >= width || q.y >= height) return false;
  const int d = std::max(std::abs(q.x - p.x), std::abs(q.y - p.y));
  return d <= cfg.step && d > cfg.sigma;
}

struct MatchField {
  int width = 0;
  int height = 0;
  std::vector<PixelPos> match;
  std::vector<double> cost;

  MatchField() = default;
  MatchField(int w, int h)
      : width(w), height(h),
        match(static_cast<std::size_t>(w) * h),
        cost(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity()) {}

  std::size_t index(PixelPos p) const noexcept { return static_cast<std::size_t>(p.y) * width + p.x; }
  PixelPos& match_at(PixelPos p) { return match[index(p)]; }
  PixelPos match_at(PixelPos p) const { return match[index(p)]; }
  double mean_cost() const {
    double sum = 0.0;
    for (double c : cost) sum += c;
    return sum / static_cast<double>(cost.size());
  }

  friend bool operator==(const MatchField&, const MatchField&) = default;
};

/// Number of stored matches violating the window, exclusion or bounds rule.
inline std::size_t count_invalid_matches(const MatchField& field, const SearchConfig& cfg) {
  std::size_t bad = 0;
  for (int y = 0; y < field.height; ++y)
    for (int x = 0; x < field.width; ++x)
      if (!is_valid_match({x, y}, field.match_at({x, y}), cfg, field.width, field.height)) ++bad;
  return bad;
}

struct NoPixelHook {
  void operator()(PixelPos) const noexcept {}
};

/// Costs that can re-score a stored match against mutable state without a
/// new patch comparison. accept(p, q) follows the evaluation of every match
/// the engine stores.
template <class Cost>
concept RefreshableCost = requires(Cost& c, PixelPos p, PixelPos q) {
  { c.refresh(p, q) } -> std::convertible_to<double>;
  c.accept(p, q);
};

/// PatchMatch engine. Cost is any callable double(PixelPos p, PixelPos q);
/// it may read mutable state, in which case stored costs reflect the state
/// at the time each match was last evaluated.
template <class Cost>
class PatchMatcher {
 public:
  PatchMatcher(int width, int height, SearchConfig cfg, Cost cost)
      : cfg_(cfg), cost_(std::move(cost)), rng_(cfg.seed), field_(width, height) {
    cfg_.validate();
    radii_ = random_search_radius_count(cfg_.step, cfg_.alpha);
  }

  const MatchField& field() const noexcept { return field_; }
  const SearchConfig& config() const noexcept { return cfg_; }
  Cost& cost() noexcept { return cost_; }
  int radius_count() const noexcept { return radii_; }
  /// Candidate evaluations performed so far (initialization included).
  /// Refreshes of the incumbent are not counted.
  std::uint64_t evaluations() const noexcept { return evaluations_; }

  /// Uniform feasible candidate per pixel, drawn in raster order.
  void random_init() {
    const int w = field_.width;
    const int h = field_.height;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const PixelPos p{x, y};
        const int x0 = std::max(0, x - cfg_.step), x1 = std::min(w - 1, x + cfg_.step);
        const int y0 = std::max(0, y - cfg_.step), y1 = std::min(h - 1, y + cfg_.step);
        const int reach = std::max(std::max(x - x0, x1 - x), std::max(y - y0, y1 - y));
        if (reach <= cfg_.sigma)
          throw ConfigError("search: pixel (" + std::to_string(x) + "," + std::to_string(y) +
                            ") has no candidate outside its exclusion zone");
        PixelPos q;
        do {
          q = {rng_.between(x0, x1), rng_.between(y0, y1)};
        } while (std::max(std::abs(q.x - x), std::abs(q.y - y)) <= cfg_.sigma);
        store(p, q, evaluate(p, q));
      }
    }
  }

  /// Overwrites p's match with a feasible q and evaluates it.
  void assign(PixelPos p, PixelPos q) {
    if (!is_valid_match(p, q, cfg_, field_.width, field_.height))
      throw InvariantError("assign: infeasible match");
    store(p, q, evaluate(p, q));
  }

  /// Tries match(q) + (p - q) for the two neighbors q already visited in
  /// this scan (left/up when forward, right/down when backward).
  void propagate(PixelPos p, bool forward) {
    const int d = forward ? -1 : 1;
    try_shifted(p, {p.x + d, p.y});
    try_shifted(p, {p.x, p.y + d});
  }

  /// One uniform draw per radius around the current best match.
  void random_search(PixelPos p) {
    const int w = field_.width;
    const int h = field_.height;
    const int wx0 = std::max(0, p.x - cfg_.step), wx1 = std::min(w - 1, p.x + cfg_.step);
    const int wy0 = std::max(0, p.y - cfg_.step), wy1 = std::min(h - 1, p.y + cfg_.step);
    double r = cfg_.step;
    for (int i = 0; i < radii_; ++i, r *= cfg_.alpha) {
      const int ri = static_cast<int>(r);
      const PixelPos best = field_.match_at(p);
      const int x0 = std::max(wx0, best.x - ri), x1 = std::min(wx1, best.x + ri);
      const int y0 = std::max(wy0, best.y - ri), y1 = std::min(wy1, best.y + ri);
      const PixelPos q{rng_.between(x0, x1), rng_.between(y0, y1)};
      try_candidate(p, q);
    }
  }

  /// Full scan: forward on even iterations, backward on odd ones. hook(p)
  /// runs after p's match has been refined. Refreshable costs first re-score
  /// the incumbent so comparisons use the current state.
  template <class Hook = NoPixelHook>
  void iterate(int iteration_index, Hook&& hook = {}) {
    const int w = field_.width;
    const int h = field_.height;
    const bool forward = iteration_index % 2 == 0;
    if (forward) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) visit({x, y}, true, hook);
    } else {
      for (int y = h - 1; y >= 0; --y)
        for (int x = w - 1; x >= 0; --x) visit({x, y}, false, hook);
    }
  }

 private:
  template <class Hook>
  void visit(PixelPos p, bool forward, Hook& hook) {
    if constexpr (RefreshableCost<Cost>) {
      const std::size_t i = field_.index(p);
      field_.cost[i] = cost_.refresh(p, field_.match[i]);
    }
    propagate(p, forward);
    random_search(p);
    hook(p);
  }

  void try_shifted(PixelPos p, PixelPos q) {
    if (q.x < 0 || q.y < 0 || q.x >= field_.width || q.y >= field_.height) return;
    const PixelPos mq = field_.match_at(q);
    try_candidate(p, {mq.x + p.x - q.x, mq.y + p.y - q.y});
  }

  void try_candidate(PixelPos p, PixelPos candidate) {
    if (!is_valid_match(p, candidate, cfg_, field_.width, field_.height)) return;
    const std::size_t i = field_.index(p);
    if (field_.match[i] == candidate) return;
    const double c = evaluate(p, candidate);
    if (c < field_.cost[i]) store(p, candidate, c);
  }

  void store(PixelPos p, PixelPos q, double c) {
    const std::size_t i = field_.index(p);
    field_.match[i] = q;
    field_.cost[i] = c;
    if constexpr (RefreshableCost<Cost>) cost_.accept(p, q);
  }

  double evaluate(PixelPos p, PixelPos q) {
    ++evaluations_;
    return cost_(p, q);
  }

  SearchConfig cfg_;
  Cost cost_;
  Rng rng_;
  MatchField field_;
  int radii_ = 0;
  std::uint64_t evaluations_ = 0;
};

}  // namespace nnsc
