#pragma once

/**
 * @file clustering.hpp
 * @brief Nearest-neighbor superpixel clustering, multi-estimate aggregation
 *        and a pixel-wise K-means (SLIC-style) baseline.
 *
 * A pixel p_i takes the label of the superpixel that owns its best patch
 * correspondence p_k. Correspondences minimize
 *
 *   D(p_i, p_k) = |P(p_i) - P(p_k)| / sqrt(n) + (m_k^2 / s^2) * G(p_k, X_k)
 *               + |c(p_i) - c_k| + |p_i - X_k|^2 * m_k^2 / s^2
 *
 * with S_k the superpixel containing p_k, X_k its barycenter, c_k its mean
 * color and G(p, X) = 2 s^2 (1 - exp(-|p - X|^2 / s^2)).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "nnsc/error.hpp"
#include "nnsc/image.hpp"
#include "nnsc/patch_match.hpp"
#include "nnsc/rng.hpp"
#include "nnsc/superpixel_state.hpp"

namespace nnsc {

struct NnscParams {
  int k = 200;
  int patch_side = 7;
  int sigma = 3;
  int iterations = 8;
  int estimations = 4;  ///< M
  double m0 = 10.0;
  bool adaptive_m = false;
  std::uint64_t seed = 0;
  int threads = 1;

  Regularity regularity() const { return {m0, adaptive_m, 10.0}; }

  void validate() const {
    if (iterations < 0) throw InputError("iterations must be >= 0");
    if (estimations < 1) throw InputError("estimation count M must be >= 1");
    if (m0 < 0.0) throw InputError("m0 must be >= 0");
    if (threads < 1) throw InputError("threads must be >= 1");
    PatchSpec{patch_side};
  }
};

/// Spatial weighting 2 s^2 (1 - exp(-|p - X|^2 / s^2)), in [0, 2 s^2).
inline double gamma(PixelPos p, Point2 barycenter, int step) {
  const double dx = p.x - barycenter.x;
  const double dy = p.y - barycenter.y;
  const double s2 = static_cast<double>(step) * step;
  return 2.0 * s2 * (1.0 - std::exp(-(dx * dx + dy * dy) / s2));
}

/// Live clustering cost bound to one run's image, padded patches and state.
/// The patch distance of every pixel's stored match is cached so the match
/// can be re-scored after the state changed.
class ClusterCost {
 public:
  ClusterCost(const LabImage& image, const PaddedImage& patches, const SuperpixelState& state,
              Regularity regularity, int step)
      : image_(&image),
        patches_(&patches),
        state_(&state),
        regularity_(regularity),
        step_(step),
        cached_(image.pixel_count()) {}

  int step() const noexcept { return step_; }

  double regularity(std::int32_t label) const {
    return regularity_.weight(state_->stats(label), image_->channels());
  }

  /// Patch distance plus barycenter-weighted spatial term of candidate p_k.
  double patch_term(PixelPos pi, PixelPos pk) const {
    return patch_term(pi, pk, patches_->distance(pi, pk));
  }

  /// Pixel-to-superpixel color distance, unsquared.
  double color_term(PixelPos pi, const SuperpixelStats& sk) const {
    double sum = 0.0;
    for (int c = 0; c < image_->channels(); ++c) {
      const double d = image_->at(pi.x, pi.y, c) - sk.mean_color(c);
      sum += d * d;
    }
    return std::sqrt(sum);
  }

  /// Squared distance from p_i to the barycenter of S_k.
  static double spatial_term(PixelPos pi, const SuperpixelStats& sk) {
    const Point2 b = sk.barycenter();
    const double dx = pi.x - b.x;
    const double dy = pi.y - b.y;
    return dx * dx + dy * dy;
  }

  double operator()(PixelPos pi, PixelPos pk) {
    last_ = {pk, patches_->distance(pi, pk)};
    return total(pi, pk, last_.distance);
  }

  /// pk, just evaluated for pi, became pi's stored match.
  void accept(PixelPos pi, PixelPos pk) {
    cached_[index(pi)] = last_.match == pk ? last_ : Cached{pk, patches_->distance(pi, pk)};
  }

  /// Same value as operator() under the current state.
  double refresh(PixelPos pi, PixelPos pk) const {
    const Cached& c = cached_[index(pi)];
    return total(pi, pk, c.match == pk ? c.distance : patches_->distance(pi, pk));
  }

 private:
  struct Cached {
    PixelPos match{-1, -1};
    double distance = 0.0;
  };

  std::size_t index(PixelPos p) const noexcept {
    return static_cast<std::size_t>(p.y) * image_->width() + p.x;
  }

  double weight(const SuperpixelStats& sk) const {
    const double m = regularity_.weight(sk, image_->channels());
    return m * m / (static_cast<double>(step_) * step_);
  }

  double patch_term(PixelPos, PixelPos pk, double distance) const {
    const SuperpixelStats& sk = state_->stats(state_->label_at(pk));
    return distance + weight(sk) * gamma(pk, sk.barycenter(), step_);
  }

  double total(PixelPos pi, PixelPos pk, double distance) const {
    const SuperpixelStats& sk = state_->stats(state_->label_at(pk));
    const double w = weight(sk);
    return distance + w * gamma(pk, sk.barycenter(), step_) + color_term(pi, sk) +
           spatial_term(pi, sk) * w;
  }

  const LabImage* image_;
  const PaddedImage* patches_;
  const SuperpixelState* state_;
  Regularity regularity_;
  int step_;
  std::vector<Cached> cached_;
  Cached last_;
};

struct RunCounters {
  std::uint64_t init_evaluations = 0;
  std::vector<std::uint64_t> iteration_evaluations;
  std::uint64_t moves = 0;
  std::uint64_t rejected_moves = 0;
  int radius_count = 0;

  std::uint64_t total_evaluations() const {
    std::uint64_t t = init_evaluations;
    for (auto e : iteration_evaluations) t += e;
    return t;
  }
};

struct RunResult {
  LabelMap map;
  GridConfig grid;
  RunCounters counters;
};

/// Optional observer for tests: called with the engine and the state after
/// initialization (index -1) and after each iteration.
struct NoRunObserver {
  template <class Engine>
  void operator()(int, const Engine&, const SuperpixelState&) const noexcept {}
};

/// One NN clustering estimate from the shared grid initialization. The label
/// map is returned before the connectivity post-process.
template <class Observer = NoRunObserver>
RunResult nnsc_single_run(const LabImage& image, const NnscParams& params, std::uint64_t seed,
                          Observer&& observer = {}) {
  params.validate();
  const PatchSpec spec(params.patch_side);
  auto [state, grid] = init_grid(image, params.k);
  const PaddedImage patches(image, spec);

  SearchConfig search{grid.step, params.sigma, seed, 0.5};
  search.validate();
  PatchMatcher engine(image.width(), image.height(), search,
                      ClusterCost(image, patches, state, params.regularity(), grid.step));

  RunCounters counters;
  counters.radius_count = engine.radius_count();
  engine.random_init();
  counters.init_evaluations = engine.evaluations();
  observer(-1, engine, state);

  auto relabel = [&](PixelPos p) {
    const std::int32_t target = state.label_at(engine.field().match_at(p));
    const std::int32_t current = state.label_at(p);
    if (target == current) return;
    if (state.move_pixel(p, current, target))
      ++counters.moves;
    else
      ++counters.rejected_moves;
  };

  for (int it = 0; it < params.iterations; ++it) {
    const std::uint64_t before = engine.evaluations();
    engine.iterate(it, relabel);
    counters.iteration_evaluations.push_back(engine.evaluations() - before);
    observer(it, engine, state);
  }
  return {state.map(), grid, std::move(counters)};
}

/// Per-pixel majority vote; ties go to the label of the lowest-index map
/// among the tied ones.
inline LabelMap aggregate(const std::vector<LabelMap>& maps) {
  if (maps.empty()) throw InputError("aggregate: no label maps");
  const int w = maps.front().width();
  const int h = maps.front().height();
  for (const auto& m : maps)
    if (m.width() != w || m.height() != h) throw InputError("aggregate: label map dimensions differ");

  LabelMap out(w, h);
  const std::size_t count = maps.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::int32_t best = maps[0][i];
    std::size_t best_votes = 0;
    for (std::size_t a = 0; a < count; ++a) {
      const std::int32_t l = maps[a][i];
      std::size_t votes = 0;
      for (std::size_t b = 0; b < count; ++b) votes += maps[b][i] == l;
      if (votes > best_votes) {
        best_votes = votes;
        best = l;
      }
    }
    out[i] = best;
  }
  return out;
}

struct DecomposeResult {
  LabelMap map;
  GridConfig grid;
  std::vector<RunCounters> runs;
};

/// Runs `fn(i)` for i in [0, count) on up to `threads` workers.
template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  {
    std::vector<std::jthread> workers;
    for (int t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (int i = t; i < count; i += threads) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// M independent estimates (seed of run i: derive_seed(seed, i)), majority
/// vote, then connectivity with orphans below s^2/4 pixels absorbed.
inline DecomposeResult nnsc_decompose(const LabImage& image, const NnscParams& params) {
  params.validate();
  std::vector<RunResult> runs(static_cast<std::size_t>(params.estimations));
  parallel_for(params.estimations, params.threads, [&](int i) {
    runs[i] = nnsc_single_run(image, params, derive_seed(params.seed, static_cast<std::uint64_t>(i)));
  });

  std::vector<LabelMap> maps;
  DecomposeResult result;
  for (auto& r : runs) {
    maps.push_back(std::move(r.map));
    result.runs.push_back(std::move(r.counters));
  }
  result.grid = runs.front().grid;
  result.map = enforce_connectivity(aggregate(maps), default_min_size(result.grid.step));
  return result;
}

struct SlicResult {
  LabelMap map;
  GridConfig grid;
  std::vector<std::uint64_t> iteration_evaluations;
};

/// Pixel-wise K-means superpixels: each center scans its (2s+1)^2 window
/// with distance |c - c_k| + |p - X_k|^2 m^2 / s^2 and pixels keep the
/// closest center. Centers start at the grid block barycenters.
inline SlicResult slic_baseline(const LabImage& image, int k, double m, int iterations) {
  if (iterations < 0) throw InputError("iterations must be >= 0");
  const GridConfig grid = make_grid_config(image.width(), image.height(), k);
  const int w = image.width();
  const int h = image.height();
  const int ch = image.channels();
  const int s = grid.step;
  const double weight = m * m / (static_cast<double>(s) * s);

  LabelMap map = grid_labels(w, h, grid);
  struct Center {
    double x, y;
    double color[3];
  };
  std::vector<Center> centers;
  for (const auto& st : recompute_stats(image, map)) {
    Center c{};
    const Point2 b = st.barycenter();
    c.x = b.x;
    c.y = b.y;
    for (int i = 0; i < ch; ++i) c.color[i] = st.mean_color(i);
    centers.push_back(c);
  }

  SlicResult result;
  result.grid = grid;
  std::vector<double> best(map.size());
  for (int it = 0; it < iterations; ++it) {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    std::uint64_t evals = 0;
    for (std::size_t kk = 0; kk < centers.size(); ++kk) {
      const Center& c = centers[kk];
      const int cx = static_cast<int>(std::lround(c.x));
      const int cy = static_cast<int>(std::lround(c.y));
      const int x0 = std::max(0, cx - s), x1 = std::min(w - 1, cx + s);
      const int y0 = std::max(0, cy - s), y1 = std::min(h - 1, cy + s);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          double dc = 0.0;
          for (int i = 0; i < ch; ++i) {
            const double d = image.at(x, y, i) - c.color[i];
            dc += d * d;
          }
          const double dx = x - c.x;
          const double dy = y - c.y;
          const double dist = std::sqrt(dc) + (dx * dx + dy * dy) * weight;
          ++evals;
          const std::size_t idx = static_cast<std::size_t>(y) * w + x;
          if (dist < best[idx]) {
            best[idx] = dist;
            map[idx] = static_cast<std::int32_t>(kk);
          }
        }
      }
    }
    result.iteration_evaluations.push_back(evals);

    std::vector<double> acc(centers.size() * (3 + ch), 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double* a = &acc[static_cast<std::size_t>(map.at(x, y)) * (3 + ch)];
        a[0] += 1.0;
        a[1] += x;
        a[2] += y;
        for (int i = 0; i < ch; ++i) a[3 + i] += image.at(x, y, i);
      }
    }
    for (std::size_t kk = 0; kk < centers.size(); ++kk) {
      const double* a = &acc[kk * (3 + ch)];
      if (a[0] == 0.0) continue;
      centers[kk].x = a[1] / a[0];
      centers[kk].y = a[2] / a[0];
      for (int i = 0; i < ch; ++i) centers[kk].color[i] = a[3 + i] / a[0];
    }
  }
  result.map = enforce_connectivity(map, default_min_size(s));
  return result;
}

}  // namespace nnsc
