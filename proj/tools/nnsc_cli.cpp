#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nnsc/clustering.hpp"
#include "nnsc/io.hpp"
#include "nnsc/metrics.hpp"
#include "nnsc/overlay.hpp"
#include "nnsc/synthetic.hpp"

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kExitInput = 2;
constexpr int kExitInvariant = 3;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int default_threads(int estimations) {
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(hw, estimations));
}

std::string join(const std::vector<std::uint64_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

// ---- decompose ------------------------------------------------------------

struct DecomposeArgs {
  std::string in;
  std::string out;
  std::string overlay;
  std::string manifest;
  std::string replay;
  std::string method = "nnsc";
  nnsc::NnscParams params;
  std::optional<int> iterations;
  std::optional<int> threads;
};

void load_replay(DecomposeArgs& a, const CLI::App& cmd) {
  const auto m = nnsc::Manifest::read(a.replay);
  auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
  if (!given("--in")) a.in = m.get("in");
  if (!given("--method")) a.method = m.get("method");
  if (!given("--k")) a.params.k = std::stoi(m.get("k"));
  if (!given("--iters")) a.iterations = std::stoi(m.get("iterations"));
  if (!given("--m0")) a.params.m0 = std::stod(m.get("m0"));
  if (a.method == "nnsc") {
    if (!given("--patch-side")) a.params.patch_side = std::stoi(m.get("patch_side"));
    if (!given("--sigma")) a.params.sigma = std::stoi(m.get("sigma"));
    if (!given("--m")) a.params.estimations = std::stoi(m.get("estimations"));
    if (!given("--adaptive-m")) a.params.adaptive_m = m.get("adaptive_m") == "1";
    if (!given("--seed")) a.params.seed = std::stoull(m.get("seed"));
  }
}

int run_decompose(DecomposeArgs a, const CLI::App& cmd) {
  if (!a.replay.empty()) load_replay(a, cmd);
  if (a.in.empty() || a.out.empty()) throw nnsc::InputError("decompose: --in and --out are required");
  if (a.method != "nnsc" && a.method != "slic")
    throw nnsc::InputError("decompose: unknown method '" + a.method + "'");

  const nnsc::Raster raster = nnsc::read_image(a.in);
  const nnsc::LabImage lab = nnsc::to_lab(raster);

  nnsc::Manifest manifest;
  manifest.set("method", a.method);
  manifest.set("in", a.in);
  manifest.set("out", a.out);
  manifest.set("width", raster.width);
  manifest.set("height", raster.height);
  manifest.set("channels", raster.channels);
  manifest.set("k", a.params.k);
  manifest.set("m0", a.params.m0);

  nnsc::LabelMap map;
  int step = 0;
  const auto start = Clock::now();
  if (a.method == "nnsc") {
    a.params.iterations = a.iterations.value_or(8);
    a.params.threads = a.threads.value_or(default_threads(a.params.estimations));
    const auto result = nnsc::nnsc_decompose(lab, a.params);
    const double elapsed = seconds_since(start);
    map = result.map;
    step = result.grid.step;
    std::uint64_t total = 0;
    std::uint64_t moves = 0;
    std::uint64_t rejected = 0;
    std::vector<std::uint64_t> per_run;
    for (const auto& r : result.runs) {
      total += r.total_evaluations();
      per_run.push_back(r.total_evaluations());
      moves += r.moves;
      rejected += r.rejected_moves;
    }
    manifest.set("iterations", a.params.iterations);
    manifest.set("patch_side", a.params.patch_side);
    manifest.set("sigma", a.params.sigma);
    manifest.set("estimations", a.params.estimations);
    manifest.set("adaptive_m", a.params.adaptive_m ? 1 : 0);
    manifest.set("seed", a.params.seed);
    manifest.set("threads", a.params.threads);
    manifest.set("seconds", elapsed);
    manifest.set("evaluations", total);
    manifest.set("evaluations_per_run", join(per_run));
    manifest.set("moves", moves);
    manifest.set("rejected_moves", rejected);
    std::printf("seconds\t%.3f\nevaluations\t%llu\nmoves\t%llu\nrejected_moves\t%llu\n", elapsed,
                static_cast<unsigned long long>(total), static_cast<unsigned long long>(moves),
                static_cast<unsigned long long>(rejected));
  } else {
    const int iterations = a.iterations.value_or(10);
    const auto result = nnsc::slic_baseline(lab, a.params.k, a.params.m0, iterations);
    const double elapsed = seconds_since(start);
    map = result.map;
    step = result.grid.step;
    std::uint64_t total = 0;
    for (auto e : result.iteration_evaluations) total += e;
    manifest.set("iterations", iterations);
    manifest.set("seconds", elapsed);
    manifest.set("evaluations", total);
    manifest.set("evaluations_per_iteration", join(result.iteration_evaluations));
    std::printf("seconds\t%.3f\nevaluations\t%llu\n", elapsed, static_cast<unsigned long long>(total));
  }
  manifest.set("step", step);
  manifest.set("superpixels", map.label_count());
  std::printf("superpixels\t%d\n", map.label_count());

  nnsc::save_label_map(map, a.out);
  if (!a.overlay.empty()) {
    manifest.set("overlay", a.overlay);
    nnsc::write_image(a.overlay, nnsc::boundary_overlay(raster, map));
  }
  if (!a.manifest.empty()) manifest.write(a.manifest);
  return 0;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string map;
  std::string gt;
  std::string manifest;
};

int run_evaluate(const EvaluateArgs& a) {
  const nnsc::LabelMap map = nnsc::load_label_map(a.map);
  const nnsc::GroundTruth gt = nnsc::load_ground_truth(a.gt);
  const double score = nnsc::asa(map, gt);
  std::printf("%.6f\n", score);
  if (!a.manifest.empty()) {
    nnsc::Manifest m;
    m.set("map", a.map);
    m.set("gt", a.gt);
    m.set("superpixels", map.label_count());
    m.set("regions", gt.region_count);
    m.set("asa", score);
    m.write(a.manifest);
  }
  return 0;
}

// ---- generate -------------------------------------------------------------

nnsc::TextureKind parse_kind(const std::string& name) {
  if (name == "grating") return nnsc::TextureKind::Grating;
  if (name == "checker" || name == "checkerboard") return nnsc::TextureKind::Checkerboard;
  if (name == "noise") return nnsc::TextureKind::Noise;
  if (name == "constant") return nnsc::TextureKind::Constant;
  throw nnsc::InputError("unknown texture kind '" + name + "'");
}

std::string kind_name(nnsc::TextureKind kind) {
  switch (kind) {
    case nnsc::TextureKind::Grating: return "grating";
    case nnsc::TextureKind::Checkerboard: return "checker";
    case nnsc::TextureKind::Noise: return "noise";
    case nnsc::TextureKind::Constant: return "constant";
  }
  return "constant";
}

// kind[:frequency[:orientation[:mean[:amplitude[:noise_seed]]]]]
nnsc::TextureSpec parse_texture(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.empty() || parts.size() > 6) throw nnsc::InputError("bad texture spec '" + text + "'");
  nnsc::TextureSpec t;
  t.kind = parse_kind(parts[0]);
  try {
    if (parts.size() > 1) t.frequency = std::stod(parts[1]);
    if (parts.size() > 2) t.orientation = std::stod(parts[2]);
    if (parts.size() > 3) t.mean = std::stod(parts[3]);
    if (parts.size() > 4) t.amplitude = std::stod(parts[4]);
    if (parts.size() > 5) t.noise_seed = std::stoull(parts[5]);
  } catch (const std::logic_error&) {
    throw nnsc::InputError("bad number in texture spec '" + text + "'");
  }
  return t;
}

std::string format_texture(const nnsc::TextureSpec& t) {
  std::ostringstream os;
  os.precision(17);
  os << kind_name(t.kind) << ':' << t.frequency << ':' << t.orientation << ':' << t.mean << ':'
     << t.amplitude << ':' << t.noise_seed;
  return os.str();
}

nnsc::Layout parse_layout(const std::string& name) {
  if (name == "split" || name == "2x1") return nnsc::Layout::vertical_split();
  if (name == "2x2") return nnsc::Layout::tiles_2x2();
  if (name == "4x4") return nnsc::Layout::tiles_4x4();
  throw nnsc::InputError("unknown layout '" + name + "' (split, 2x2, 4x4)");
}

struct GenerateArgs {
  std::string out;
  std::string gt;
  std::string manifest;
  std::string replay;
  std::string layout = "split";
  std::vector<std::string> textures;
  bool equal_mean = false;
  int jitter = 0;
  int width = 256;
  int height = 256;
  std::uint64_t seed = 0;
};

int run_generate(GenerateArgs a, const CLI::App& cmd) {
  if (!a.replay.empty()) {
    const auto m = nnsc::Manifest::read(a.replay);
    auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
    if (!given("--out")) a.out = m.get("out");
    if (!given("--gt")) a.gt = m.get("gt");
    a.layout = m.get("layout");
    a.equal_mean = m.get("equal_mean") == "1";
    a.jitter = std::stoi(m.get("jitter"));
    a.width = std::stoi(m.get("width"));
    a.height = std::stoi(m.get("height"));
    a.seed = std::stoull(m.get("seed"));
    a.textures.clear();
    const int count = std::stoi(m.get("textures"));
    for (int i = 0; i < count; ++i) a.textures.push_back(m.get("texture." + std::to_string(i)));
  }
  if (a.out.empty()) throw nnsc::InputError("generate: --out is required");
  const nnsc::Layout layout = parse_layout(a.layout);

  std::vector<nnsc::TextureSpec> specs;
  for (const auto& t : a.textures) specs.push_back(parse_texture(t));
  if (specs.empty()) {
    // Grating and checkerboard alternating over the tiles.
    nnsc::TextureSpec grating{nnsc::TextureKind::Grating, 0.125, 0.0, 128.0, 60.0, 1};
    nnsc::TextureSpec checker{nnsc::TextureKind::Checkerboard, 0.125, 0.0, 128.0, 60.0, 2};
    for (int i = 0; i < layout.tile_count(); ++i)
      specs.push_back((i / layout.columns + i % layout.columns) % 2 ? checker : grating);
  }

  nnsc::CompositeOptions options;
  options.layout = layout;
  options.equal_mean = a.equal_mean;
  options.jitter = a.jitter;
  const auto composite = nnsc::generate_composite(a.width, a.height, options, specs, a.seed);

  nnsc::write_image(a.out, composite.image);
  if (!a.gt.empty()) {
    nnsc::LabelMap regions(a.width, a.height, composite.truth.regions);
    nnsc::save_label_map(regions, a.gt);
  }
  if (!a.manifest.empty()) {
    nnsc::Manifest m;
    m.set("out", a.out);
    m.set("gt", a.gt);
    m.set("layout", a.layout);
    m.set("equal_mean", a.equal_mean ? 1 : 0);
    m.set("jitter", a.jitter);
    m.set("width", a.width);
    m.set("height", a.height);
    m.set("seed", a.seed);
    m.set("textures", specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i)
      m.set("texture." + std::to_string(i), format_texture(specs[i]));
    m.write(a.manifest);
  }
  std::printf("regions\t%d\n", composite.truth.region_count);
  return 0;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  std::vector<int> sizes{64, 128, 192, 256};
  int k = 64;
  int iterations = 8;
  int estimations = 1;
  std::uint64_t seed = 0;
  std::string manifest;
};

int run_bench(const BenchArgs& a) {
  nnsc::Manifest manifest;
  std::printf("side\tpixels\tmethod\tevaluations\tper_iteration\tper_iteration_per_pixel\tbound\tseconds\n");
  for (int side : a.sizes) {
    const auto composite = nnsc::two_texture_composite(side, side, a.seed);
    const nnsc::LabImage lab = nnsc::gray_to_lab(composite.image);
    const double pixels = static_cast<double>(side) * side;

    nnsc::NnscParams params;
    params.k = a.k;
    params.iterations = a.iterations;
    params.estimations = a.estimations;
    params.seed = a.seed;
    params.threads = default_threads(a.estimations);
    auto start = Clock::now();
    const auto nnsc_result = nnsc::nnsc_decompose(lab, params);
    const double nnsc_seconds = seconds_since(start);
    std::uint64_t nnsc_iter_evals = 0;
    std::uint64_t nnsc_total = 0;
    std::uint64_t worst_iteration = 0;
    for (const auto& r : nnsc_result.runs) {
      nnsc_total += r.total_evaluations();
      for (auto e : r.iteration_evaluations) {
        nnsc_iter_evals += e;
        worst_iteration = std::max(worst_iteration, e);
      }
    }
    const int s = nnsc_result.grid.step;
    const double bound = 2.0 + std::ceil(std::log2(static_cast<double>(s))) + 1.0;
    const double nnsc_per_iter =
        static_cast<double>(nnsc_iter_evals) / (static_cast<double>(a.iterations) * a.estimations);

    start = Clock::now();
    const auto slic = nnsc::slic_baseline(lab, a.k, 10.0, a.iterations);
    const double slic_seconds = seconds_since(start);
    std::uint64_t slic_total = 0;
    for (auto e : slic.iteration_evaluations) slic_total += e;
    const double slic_per_iter = static_cast<double>(slic_total) / a.iterations;

    std::printf("%d\t%.0f\tnnsc\t%llu\t%.0f\t%.4f\t%.0f\t%.4f\n", side, pixels,
                static_cast<unsigned long long>(nnsc_total), nnsc_per_iter, nnsc_per_iter / pixels,
                bound, nnsc_seconds);
    std::printf("%d\t%.0f\tslic\t%llu\t%.0f\t%.4f\t-\t%.4f\n", side, pixels,
                static_cast<unsigned long long>(slic_total), slic_per_iter, slic_per_iter / pixels,
                slic_seconds);
    std::printf("%d\t%.0f\tratio_slic_over_nnsc\t%.4f\n", side, pixels, slic_per_iter / nnsc_per_iter);

    const std::string key = "size." + std::to_string(side) + ".";
    manifest.set(key + "nnsc_evaluations", nnsc_total);
    manifest.set(key + "nnsc_worst_iteration", worst_iteration);
    manifest.set(key + "nnsc_seconds", nnsc_seconds);
    manifest.set(key + "slic_evaluations", slic_total);
    manifest.set(key + "slic_seconds", slic_seconds);
  }
  if (!a.manifest.empty()) {
    manifest.set("k", a.k);
    manifest.set("iterations", a.iterations);
    manifest.set("estimations", a.estimations);
    manifest.set("seed", a.seed);
    manifest.write(a.manifest);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Texture-aware nearest-neighbor superpixels"};
  app.require_subcommand(1);

  DecomposeArgs dec;
  auto* decompose = app.add_subcommand("decompose", "Decompose an image into superpixels");
  decompose->add_option("--in", dec.in, "Input image (PNG, PGM, PPM)");
  decompose->add_option("--out", dec.out, "Label map (.png: 16-bit, .csv)");
  decompose->add_option("--k", dec.params.k, "Requested superpixel count")->capture_default_str();
  decompose->add_option("--method", dec.method, "nnsc or slic")->capture_default_str();
  decompose->add_option("--patch-side", dec.params.patch_side, "Patch side (odd)")->capture_default_str();
  decompose->add_option("--sigma", dec.params.sigma, "Exclusion radius")->capture_default_str();
  decompose->add_option("--iters", dec.iterations, "Iterations (nnsc: 8, slic: 10)");
  decompose->add_option("--m", dec.params.estimations, "Aggregated estimations M")->capture_default_str();
  decompose->add_option("--m0", dec.params.m0, "Regularity")->capture_default_str();
  decompose->add_flag("--adaptive-m", dec.params.adaptive_m, "Per-superpixel regularity");
  decompose->add_option("--seed", dec.params.seed, "Seed")->capture_default_str();
  decompose->add_option("--threads", dec.threads, "Worker threads for the M estimations");
  decompose->add_option("--overlay", dec.overlay, "Boundary overlay image");
  decompose->add_option("--manifest", dec.manifest, "Run manifest (key=value)");
  decompose->add_option("--replay", dec.replay, "Take parameters from a run manifest");

  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "ASA of a label map against ground truth");
  evaluate->add_option("--map", eval.map, "Label map")->required();
  evaluate->add_option("--gt", eval.gt, "Ground-truth label map")->required();
  evaluate->add_option("--manifest", eval.manifest, "Result manifest");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Synthetic composite texture image");
  generate->add_option("--out", gen.out, "Image path");
  generate->add_option("--gt", gen.gt, "Ground-truth label map path");
  generate->add_option("--manifest", gen.manifest, "Generation manifest");
  generate->add_option("--replay", gen.replay, "Regenerate from a manifest");
  generate->add_option("--layout", gen.layout, "split, 2x2 or 4x4")->capture_default_str();
  generate->add_option("--texture", gen.textures,
                       "kind[:freq[:orientation[:mean[:amplitude[:noise_seed]]]]], one per tile");
  generate->add_flag("--equal-mean", gen.equal_mean, "Re-center all tiles on one mean");
  generate->add_option("--jitter", gen.jitter, "Tile edge jitter in pixels")->capture_default_str();
  generate->add_option("--width", gen.width)->capture_default_str();
  generate->add_option("--height", gen.height)->capture_default_str();
  generate->add_option("--seed", gen.seed)->capture_default_str();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Evaluation counters and timing, nnsc vs slic");
  bench_cmd->add_option("--sizes", bench.sizes, "Square image sides")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--k", bench.k)->capture_default_str();
  bench_cmd->add_option("--iters", bench.iterations)->capture_default_str();
  bench_cmd->add_option("--m", bench.estimations)->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();
  bench_cmd->add_option("--manifest", bench.manifest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (decompose->parsed()) return run_decompose(dec, *decompose);
    if (evaluate->parsed()) return run_evaluate(eval);
    if (generate->parsed()) return run_generate(gen, *generate);
    if (bench_cmd->parsed()) return run_bench(bench);
  } catch (const nnsc::InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::logic_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
