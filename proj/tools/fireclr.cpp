// fireclr: command-line pipeline for contrastive burned-area change detection.
//
//   synth -> tile -> train -> score -> cluster / evaluate / render
//   baseline computes dNDVI, dNBR or the band-difference PCA on the raw scenes.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fireclr/change.hpp"
#include "fireclr/cluster.hpp"
#include "fireclr/error.hpp"
#include "fireclr/evaluation.hpp"
#include "fireclr/geotiff.hpp"
#include "fireclr/render.hpp"
#include "fireclr/run_config.hpp"
#include "fireclr/spectral.hpp"
#include "fireclr/synth.hpp"
#include "fireclr/tiling.hpp"
#include "fireclr/trainer.hpp"

namespace fs = std::filesystem;
using namespace fireclr;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct Globals {
  std::string config;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_globals(CLI::App* cmd, Globals& g) {
  cmd->add_option("--config", g.config, "RunConfig JSON document")->check(CLI::ExistingFile);
  cmd->add_option("--threads", g.threads, "Worker threads (1 = deterministic serial mode)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", g.seed, "Seed override for synth, train and cluster");
  cmd->add_option("--out", g.out, "Output directory (default: config out_dir or .)");
}

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (!g.out.empty()) cfg.out_dir = g.out;
  cfg.train.threads = g.threads;
  if (g.seed) {
    cfg.train.seed = *g.seed;
    if (cfg.synth) cfg.synth->seed = *g.seed;
  }
  fs::create_directories(cfg.out_dir);
  return cfg;
}

void note(const std::string& msg) { std::cerr << msg << '\n'; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

SceneRef scene_arg(const std::string& path, const std::optional<SceneRef>& fallback, const char* what) {
  if (!path.empty()) return SceneRef{path, std::nullopt, std::nullopt, 10000.0};
  if (fallback) return *fallback;
  throw ConfigError(std::string("no ") + what + " scene given (flag or config)");
}

fs::path require_path(const std::string& flag, const std::optional<fs::path>& fallback, const char* what) {
  if (!flag.empty()) return flag;
  if (fallback) return *fallback;
  throw ConfigError(std::string("no ") + what + " path given (flag or config)");
}

/// A single-band score grid on the native pixel grid. Change maps written by
/// `score` are upsampled to the grid they were computed on.
struct ScoreGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  GeoInfo geo;
  std::string crs_id;
};

ScoreGrid load_score_grid(const fs::path& path) {
  RasterData raster = read_geotiff(path);
  if (raster.bands != 1) throw DataError("score raster must be single-band: " + path.string());
  if (raster.description.find("fireclr_change_map") != std::string::npos) {
    const ChangeMap cm = load_change_map(path);
    ScoreGrid g{cm.source_rows, cm.source_cols, upsample_to_native(cm, cm.source_rows, cm.source_cols),
                {cm.geo.origin_x, cm.geo.origin_y, cm.geo.pixel_size / cm.stride}, cm.crs_id};
    return g;
  }
  return {raster.rows, raster.cols, std::move(raster.values), raster.geo, raster.crs_id};
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string spec;
  std::optional<int> snapshot;
};

void run_synth(const Globals& g, const SynthArgs& a) {
  RunConfig cfg = resolve_config(g);
  SynthSpec spec = cfg.synth.value_or(SynthSpec{});
  if (!a.spec.empty()) {
    try {
      spec = read_json(a.spec).get<SynthSpec>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("invalid synth spec: " + std::string(e.what()));
    }
  }
  if (g.seed) spec.seed = *g.seed;
  if (a.snapshot) spec.snapshot = *a.snapshot;
  spec.validate();

  const SynthPair pair = generate_pair(spec);
  const fs::path out = cfg.out_dir;
  save_scene(pair.pre, out / "pre.tif");
  save_scene(pair.post, out / "post.tif");
  GroundTruthMask burned = make_mask(spec.rows, spec.cols, pair.burned_mask, LabelEncoding::binary);
  burned.geo = pair.pre.geo;
  burned.crs_id = pair.pre.crs_id;
  save_mask(burned, out / "burned_mask.tif");
  GroundTruthMask severity = make_mask(spec.rows, spec.cols, pair.severity_mask, LabelEncoding::severity);
  severity.geo = pair.pre.geo;
  severity.crs_id = pair.pre.crs_id;
  save_mask(severity, out / "severity_mask.tif");
  write_text(out / "synth_spec.json", nlohmann::json(spec).dump(2) + "\n");
  note("wrote pre.tif, post.tif, burned_mask.tif, severity_mask.tif to " + out.string());
}

// ---------------------------------------------------------------- tile

struct TileArgs {
  std::vector<std::string> scenes;
  std::optional<int> stride;
  std::string norm_stats;
  bool fit_stats = false;
};

void run_tile(const Globals& g, const TileArgs& a) {
  RunConfig cfg = resolve_config(g);
  std::vector<SceneRef> refs;
  for (const auto& s : a.scenes) refs.push_back({s, std::nullopt, std::nullopt, 10000.0});
  if (refs.empty()) refs = cfg.training_scenes;
  if (refs.empty()) {
    if (cfg.pre) refs.push_back(*cfg.pre);
    if (cfg.post) refs.push_back(*cfg.post);
  }
  if (refs.empty()) throw ConfigError("no scenes to tile (--scene or config training_scenes)");
  const int stride = a.stride.value_or(cfg.train_stride);
  if (stride < 1 || stride > kMaxStride) throw ConfigError("stride must lie in [1, " + std::to_string(kMaxStride) + "]");

  std::vector<Scene> scenes;
  for (const auto& r : refs) scenes.push_back(load_scene_ref(r, cfg.roi, cfg.pixel_size));

  NormStats stats;
  if (a.fit_stats) {
    stats = compute_norm_stats(scenes);
    const fs::path dest = a.norm_stats.empty() ? cfg.norm_stats.value_or(fs::path(cfg.out_dir) / "norm_stats.json")
                                               : fs::path(a.norm_stats);
    save_norm_stats(stats, dest);
    note("wrote " + dest.string());
  } else {
    stats = load_norm_stats(require_path(a.norm_stats, cfg.norm_stats, "norm stats"));
  }
  for (const auto& s : scenes) {
    const TileSet ts = extract_tiles(normalize(s, stats), stride);
    const fs::path dest = fs::path(cfg.out_dir) / (s.scene_id + ".tiles");
    save_tileset(ts, dest);
    note("wrote " + dest.string() + " (" + std::to_string(ts.tiles.size()) + " tiles)");
  }
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::vector<std::string> tiles;
  std::optional<int> max_epochs;
  bool quiet = false;
};

void run_train(const Globals& g, const TrainArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (a.max_epochs) cfg.train.max_epochs = *a.max_epochs;
  cfg.train.validate();
  if (a.tiles.empty()) throw ConfigError("train needs at least one --tiles file");
  std::vector<Tile> tiles;
  for (const auto& p : a.tiles) {
    TileSet ts = load_tileset(p);
    for (auto& t : ts.tiles) tiles.push_back(std::move(t));
  }
  const TrainResult result = train(tiles, cfg.train, cfg.augmentation, [&](int epoch, double loss) {
    if (!a.quiet) std::fprintf(stderr, "epoch %d mean_loss %.6f\n", epoch, loss);
  });
  const fs::path ckpt = cfg.checkpoint.value_or(fs::path(cfg.out_dir) / "checkpoint.fclr");
  save_checkpoint(result.params, ckpt);
  save_loss_history(result.loss_history, fs::path(cfg.out_dir) / "loss_history.csv");
  note("wrote " + ckpt.string() + " (best epoch " + std::to_string(result.best_epoch) + " of " +
       std::to_string(result.loss_history.size()) + (result.early_stopped ? ", early stop" : "") + ")");
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  std::string pre, post, checkpoint, norm_stats;
  std::optional<int> stride;
  std::string metric, representation, colormap;
};

void run_score(const Globals& g, const ScoreArgs& a) {
  RunConfig cfg = resolve_config(g);
  const Metric metric = a.metric.empty() ? cfg.metric : parse_metric(a.metric);
  const Representation rep = a.representation.empty() ? cfg.representation : parse_representation(a.representation);
  const Colormap cmap = a.colormap.empty() ? cfg.colormap : parse_colormap(a.colormap);
  const int stride = a.stride.value_or(cfg.stride);
  if (stride < 1 || stride > kMaxStride) throw ConfigError("stride must lie in [1, " + std::to_string(kMaxStride) + "]");

  const NormStats stats = load_norm_stats(require_path(a.norm_stats, cfg.norm_stats, "norm stats"));
  const Scene pre = normalize(load_scene_ref(scene_arg(a.pre, cfg.pre, "pre"), cfg.roi, cfg.pixel_size), stats);
  const Scene post = normalize(load_scene_ref(scene_arg(a.post, cfg.post, "post"), cfg.roi, cfg.pixel_size), stats);
  const EncoderParams params = load_checkpoint(require_path(a.checkpoint, cfg.checkpoint, "checkpoint"), pre.channels);

  const ChangeMap cm = change_map(params, pre, post, stride, metric, rep, g.threads);
  const fs::path out = cfg.out_dir;
  save_change_map(cm, out / "change_map.tif");
  const auto native = upsample_to_native(cm, pre.rows, pre.cols);
  write_score_geotiff(out / "change_map_native.tif", native, pre.rows, pre.cols, pre.geo, pre.crs_id,
                      "change score, nearest tile center");
  write_score_png(out / "change_map.png", cm.scores, cm.grid_rows, cm.grid_cols, cmap);
  note("wrote change_map.tif (" + std::to_string(cm.grid_rows) + "x" + std::to_string(cm.grid_cols) +
       "), change_map_native.tif, change_map.png to " + out.string());
}

// ---------------------------------------------------------------- baseline

struct BaselineArgs {
  std::string pre, post, index = "ndvi", colormap;
};

void run_baseline(const Globals& g, const BaselineArgs& a) {
  RunConfig cfg = resolve_config(g);
  const Colormap cmap = a.colormap.empty() ? cfg.colormap : parse_colormap(a.colormap);
  const Scene pre = load_scene_ref(scene_arg(a.pre, cfg.pre, "pre"), cfg.roi, cfg.pixel_size);
  const Scene post = load_scene_ref(scene_arg(a.post, cfg.post, "post"), cfg.roi, cfg.pixel_size);
  const fs::path out = cfg.out_dir;

  if (a.index == "pca") {
    const PcaBaseline b = pca_baseline(pre, post, cfg.k, g.seed.value_or(cfg.train.seed));
    for (const auto& w : b.severity.warnings) note("warning: " + w);
    write_score_geotiff(out / "pca_score.tif", b.scores, pre.rows, pre.cols, pre.geo, pre.crs_id,
                        "first principal component of band differences");
    write_label_geotiff(out / "pca_severity.tif", b.severity.labels, pre.rows, pre.cols, pre.geo, pre.crs_id,
                        "labels: 0 unburned, 1 black_ash, 2 white_ash, 255 invalid");
    write_severity_png(out / "pca_severity.png", b.severity.labels, pre.rows, pre.cols);
    note("wrote pca_score.tif, pca_severity.tif, pca_severity.png to " + out.string());
    return;
  }
  IndexMap diff;
  if (a.index == "ndvi") {
    diff = diff_index(ndvi(pre), ndvi(post));
  } else if (a.index == "nbr") {
    diff = diff_index(nbr(pre), nbr(post));
  } else {
    throw ConfigError("unknown index '" + a.index + "' (expected ndvi, nbr or pca)");
  }
  const std::string name(to_string(diff.kind));
  write_score_geotiff(out / (name + ".tif"), diff.values, diff.rows, diff.cols, diff.geo, diff.crs_id, name);
  write_score_png(out / (name + ".png"), diff.values, diff.rows, diff.cols, cmap);
  note("wrote " + name + ".tif, " + name + ".png to " + out.string());
}

// ---------------------------------------------------------------- cluster

struct ClusterArgs {
  std::string scores;
  std::optional<int> k;
};

void run_cluster(const Globals& g, const ClusterArgs& a) {
  RunConfig cfg = resolve_config(g);
  const int k = a.k.value_or(cfg.k);
  const ScoreGrid grid = load_score_grid(a.scores);
  const SeverityResult sev = classify_severity(grid.values, k, g.seed.value_or(cfg.train.seed));
  for (const auto& w : sev.warnings) note("warning: " + w);
  const fs::path out = cfg.out_dir;
  write_label_geotiff(out / "severity.tif", sev.labels, grid.rows, grid.cols, grid.geo, grid.crs_id,
                      "labels: 0 unburned, 1 black_ash, 2 white_ash, 255 invalid");
  write_severity_png(out / "severity.png", sev.labels, grid.rows, grid.cols);
  std::string centroids;
  for (int c = 0; c < k; ++c) centroids += (c ? ", " : "") + std::to_string(sev.model.centroids[c]);
  note("centroids: " + centroids);
  note("wrote severity.tif, severity.png to " + out.string());
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string scores, mask, mask_encoding = "binary", severity, severity_mask;
};

void run_evaluate(const Globals& g, const EvaluateArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (a.scores.empty() && a.severity.empty()) throw ConfigError("evaluate needs --scores and/or --severity");
  EvalReport report;
  std::optional<std::pair<int, int>> dims;
  if (!a.scores.empty()) {
    if (a.mask.empty()) throw ConfigError("--scores requires --mask");
    const LabelEncoding enc = a.mask_encoding == "severity" ? LabelEncoding::severity
                              : a.mask_encoding == "binary"  ? LabelEncoding::binary
                                                             : throw ConfigError("mask encoding must be binary or severity");
    const ScoreGrid grid = load_score_grid(a.scores);
    dims = std::pair{grid.rows, grid.cols};
    const GroundTruthMask mask = load_mask(a.mask, enc, dims);
    const PRCurve curve = pr_curve(grid.values, mask);
    report.auprc = auprc(curve);
    report.ignored_pixels = curve.ignored;
  }
  if (!a.severity.empty()) {
    if (a.severity_mask.empty()) throw ConfigError("--severity requires --severity-mask");
    const GroundTruthMask pred = load_mask(a.severity, LabelEncoding::severity, dims);
    const GroundTruthMask gt = load_mask(a.severity_mask, LabelEncoding::severity, std::pair{pred.rows, pred.cols});
    F1Result f1 = f1_per_class(pred.labels, gt.labels);
    for (const auto& w : f1.warnings) note("warning: " + w);
    report.ignored_pixels = std::max(report.ignored_pixels, f1.ignored);
    report.f1 = std::move(f1);
  }
  const fs::path dest = fs::path(cfg.out_dir) / "eval_report.json";
  save_eval_report(report, dest);
  if (!a.scores.empty()) std::printf("AUPRC %.6f\n", report.auprc);
  if (report.f1) {
    for (int c = 2; c >= 0; --c) std::printf("F1 %s %.6f\n", kSeverityNames[c], report.f1->f1[c]);
    std::printf("F1 macro %.6f\n", report.f1->macro_f1());
  }
  note("wrote " + dest.string());
}

// ---------------------------------------------------------------- render

struct RenderArgs {
  std::string input, output, colormap;
  std::vector<double> range;
  bool severity = false;
};

void run_render(const Globals& g, const RenderArgs& a) {
  RunConfig cfg = resolve_config(g);
  const fs::path dest = a.output.empty() ? fs::path(cfg.out_dir) / (fs::path(a.input).stem().string() + ".png")
                                         : fs::path(a.output);
  if (a.severity) {
    const GroundTruthMask labels = load_mask(a.input, LabelEncoding::severity);
    write_severity_png(dest, labels.labels, labels.rows, labels.cols);
  } else {
    const Colormap cmap = a.colormap.empty() ? cfg.colormap : parse_colormap(a.colormap);
    RasterData raster = read_geotiff(a.input);
    if (raster.bands != 1) throw DataError("render expects a single-band raster");
    std::optional<ScoreRange> range;
    if (!a.range.empty()) range = ScoreRange{a.range[0], a.range[1]};
    write_score_png(dest, raster.values, raster.rows, raster.cols, cmap, range);
  }
  note("wrote " + dest.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fireclr: contrastive burned-area change detection"};
  app.require_subcommand(1);
  Globals g;

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic pre/post fire scene pair with exact masks");
  add_globals(synth, g);
  synth->add_option("--spec", synth_args.spec, "SynthSpec JSON (default: config synth section)")->check(CLI::ExistingFile);
  synth->add_option("--snapshot", synth_args.snapshot, "Acquisition snapshot index");

  TileArgs tile_args;
  auto* tile = app.add_subcommand("tile", "Normalize scenes and cut them into 32x32 tiles");
  add_globals(tile, g);
  tile->add_option("--scene", tile_args.scenes, "Scene GeoTIFF written by synth (repeatable)")->check(CLI::ExistingFile);
  tile->add_option("--stride", tile_args.stride, "Tile stride in pixels (default: config train_stride)");
  tile->add_option("--norm-stats", tile_args.norm_stats, "NormStats JSON to read, or to write with --fit-stats");
  tile->add_flag("--fit-stats", tile_args.fit_stats, "Compute NormStats from the given scenes");

  TrainArgs train_args;
  auto* trn = app.add_subcommand("train", "Train the contrastive encoder on tile files");
  add_globals(trn, g);
  trn->add_option("--tiles", train_args.tiles, "TileSet file (repeatable)")->check(CLI::ExistingFile);
  trn->add_option("--max-epochs", train_args.max_epochs, "Override TrainConfig max_epochs");
  trn->add_flag("--quiet", train_args.quiet, "Do not print per-epoch losses");

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Compute the embedding-distance change map of a scene pair");
  add_globals(score, g);
  score->add_option("--pre", score_args.pre, "Pre-fire scene")->check(CLI::ExistingFile);
  score->add_option("--post", score_args.post, "Post-fire scene")->check(CLI::ExistingFile);
  score->add_option("--checkpoint", score_args.checkpoint, "Encoder checkpoint")->check(CLI::ExistingFile);
  score->add_option("--norm-stats", score_args.norm_stats, "NormStats JSON")->check(CLI::ExistingFile);
  score->add_option("--stride", score_args.stride, "Scoring stride in pixels (default: config stride)");
  score->add_option("--metric", score_args.metric, "cosine or euclidean");
  score->add_option("--representation", score_args.representation, "h (256-d) or z (128-d)");
  score->add_option("--colormap", score_args.colormap, "grayscale or viridis-like");

  BaselineArgs baseline_args;
  auto* baseline = app.add_subcommand("baseline", "Spectral-index or PCA baseline change maps");
  add_globals(baseline, g);
  baseline->add_option("--pre", baseline_args.pre, "Pre-fire scene")->check(CLI::ExistingFile);
  baseline->add_option("--post", baseline_args.post, "Post-fire scene")->check(CLI::ExistingFile);
  baseline->add_option("--index", baseline_args.index, "ndvi, nbr or pca")->capture_default_str();
  baseline->add_option("--colormap", baseline_args.colormap, "grayscale or viridis-like");

  ClusterArgs cluster_args;
  auto* cluster = app.add_subcommand("cluster", "k-means severity classes from a score map");
  add_globals(cluster, g);
  cluster->add_option("--scores", cluster_args.scores, "Score GeoTIFF (change maps are upsampled)")
      ->required()
      ->check(CLI::ExistingFile);
  cluster->add_option("--k", cluster_args.k, "Number of clusters (default: config k)");

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "AUPRC and per-class F1 against ground truth");
  add_globals(evaluate, g);
  evaluate->add_option("--scores", eval_args.scores, "Score GeoTIFF ranked for AUPRC")->check(CLI::ExistingFile);
  evaluate->add_option("--mask", eval_args.mask, "Ground-truth mask for AUPRC")->check(CLI::ExistingFile);
  evaluate->add_option("--mask-encoding", eval_args.mask_encoding, "binary or severity")->capture_default_str();
  evaluate->add_option("--severity", eval_args.severity, "Predicted severity GeoTIFF for F1")->check(CLI::ExistingFile);
  evaluate->add_option("--severity-mask", eval_args.severity_mask, "Ground-truth severity mask")
      ->check(CLI::ExistingFile);

  RenderArgs render_args;
  auto* render = app.add_subcommand("render", "Render a score map or severity map to PNG");
  add_globals(render, g);
  render->add_option("--input", render_args.input, "Single-band GeoTIFF")->required()->check(CLI::ExistingFile);
  render->add_option("--output", render_args.output, "PNG path (default: <out>/<stem>.png)");
  render->add_option("--colormap", render_args.colormap, "grayscale or viridis-like");
  render->add_option("--range", render_args.range, "Display range lo hi")->expected(2);
  render->add_flag("--severity", render_args.severity, "Input holds severity labels; use the class palette");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*synth) run_synth(g, synth_args);
    else if (*tile) run_tile(g, tile_args);
    else if (*trn) run_train(g, train_args);
    else if (*score) run_score(g, score_args);
    else if (*baseline) run_baseline(g, baseline_args);
    else if (*cluster) run_cluster(g, cluster_args);
    else if (*evaluate) run_evaluate(g, eval_args);
    else if (*render) run_render(g, render_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
