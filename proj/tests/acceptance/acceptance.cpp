#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fireclr/change.hpp"
#include "fireclr/cluster.hpp"
#include "fireclr/contrastive_loss.hpp"
#include "fireclr/encoder.hpp"
#include "fireclr/evaluation.hpp"
#include "fireclr/raster.hpp"
#include "fireclr/rng.hpp"
#include "fireclr/spectral.hpp"
#include "fireclr/synth.hpp"
#include "fireclr/tiling.hpp"
#include "fireclr/trainer.hpp"
#include "test_support.hpp"

using namespace fireclr;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome gradient_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t checked = 0, kinks = 0;
  for (int i = 0; i < 20; ++i) {
    const int channels = i % 2 == 0 ? 2 : 4;
    const auto r = testing::gradient_check(channels, {4, 8}, 4, 1000 + i);
    worst = std::max(worst, r.max_rel_error);
    checked += r.parameters;
    kinks += r.kink_crossings;
    o.require(r.kink_crossings * 5 < r.parameters, "net " + std::to_string(i) + " mostly straddles ReLU kinks");
  }
  const double elapsed = seconds_since(t0);
  o.require(worst < 1e-4, "max relative error " + std::to_string(worst));
  o.require(elapsed < 120.0, "runtime " + std::to_string(elapsed) + " s");
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("20 nets, max rel err ") + std::to_string(worst) + ", " +
              std::to_string(kinks) + " of " + std::to_string(checked) + " coordinates straddle a ReLU kink, " +
              std::to_string(elapsed) + " s";
  return o;
}

Outcome loss_oracles() {
  Outcome o;
  const std::vector<double> same(4 * 3, 1.0);
  const double l_same = nt_xent_loss<double>(same, 4, 3, 0.5).loss;
  o.require(std::abs(l_same - std::log(3.0)) <= 1e-6, "identical batch " + std::to_string(l_same));

  const std::vector<double> ortho = {1, 0, 1, 0, 0, 1, 0, 1};
  const double l_ortho = nt_xent_loss<double>(ortho, 4, 2, 1.0).loss;
  const double expected = std::log((std::exp(1.0) + 2.0) / std::exp(1.0));
  o.require(std::abs(l_ortho - expected) <= 1e-6, "orthogonal pairs " + std::to_string(l_ortho));

  Rng rng(5);
  std::vector<double> one(2 * 7);
  for (auto& v : one) v = rng.normal();
  const double l_one = nt_xent_loss<double>(one, 2, 7, 0.5).loss;
  o.require(l_one == 0.0, "N=1 gives " + std::to_string(l_one));
  if (o.pass) o.detail = fmt("ln 3 case %.9f", l_same) + fmt(", orthogonal case %.9f", l_ortho);
  return o;
}

Outcome index_invariants() {
  Outcome o;
  const auto t0 = Clock::now();
  Scene s;
  s.rows = s.cols = 1000;
  s.channels = 5;
  s.band_map = {{BandRole::red, 0}, {BandRole::green, 1}, {BandRole::blue, 2}, {BandRole::nir, 3}, {BandRole::swir, 4}};
  s.geo = {0.0, 10000.0, 10.0};
  s.crs_id = "EPSG:32611";
  s.pixels.resize(static_cast<std::size_t>(5) * 1000 * 1000);
  Rng rng(17);
  for (auto& v : s.pixels) v = rng.uniform();
  Scene scaled = s;
  const std::size_t n = static_cast<std::size_t>(s.rows) * s.cols;
  for (std::size_t p = 0; p < n; ++p) {
    const double c = std::exp(rng.uniform(std::log(1e-3), std::log(1e3)));
    for (int b = 0; b < 5; ++b) scaled.pixels[b * n + p] *= c;
  }

  for (const auto& index : {ndvi, nbr}) {
    const IndexMap m = index(s);
    const IndexMap ms = index(scaled);
    bool in_range = true;
    double max_shift = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double v = m.values[p];
      if (!std::isnan(v) && (v < -1.0 || v > 1.0)) in_range = false;
      if (std::isnan(v) != std::isnan(ms.values[p])) max_shift = std::numeric_limits<double>::infinity();
      else if (!std::isnan(v)) max_shift = std::max(max_shift, std::abs(v - ms.values[p]));
    }
    const std::string name(to_string(m.kind));
    o.require(in_range, name + " out of [-1, 1]");
    o.require(max_shift <= 1e-12, name + " scale shift " + std::to_string(max_shift));

    Scene later = s;
    later.timestamp = s.timestamp.plus_days(1);
    const IndexMap d = diff_index(m, index(later));
    o.require(std::all_of(d.values.begin(), d.values.end(), [](double v) { return v == 0.0; }),
              name + " self difference not zero");
  }
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("1e6 pixels, ") + std::to_string(seconds_since(t0)) + " s";
  return o;
}

Outcome metric_axioms() {
  Outcome o;
  Rng rng(23);
  const int dim = 16;
  std::vector<double> a(dim), b(dim), c(dim), a_scaled(dim);
  bool symmetric = true, triangle = true, range = true, scale = true;
  for (int t = 0; t < 10000; ++t) {
    for (int i = 0; i < dim; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
      c[i] = rng.normal();
    }
    const double k = std::exp(rng.uniform(std::log(1e-3), std::log(1e3)));
    for (int i = 0; i < dim; ++i) a_scaled[i] = k * a[i];
    if (cosine_distance(a, b) != cosine_distance(b, a)) symmetric = false;
    if (euclidean_distance(a, b) != euclidean_distance(b, a)) symmetric = false;
    const double ac = euclidean_distance(a, c);
    const double abc = euclidean_distance(a, b) + euclidean_distance(b, c);
    if (ac > abc * (1.0 + 1e-15)) triangle = false;
    for (const double d : {cosine_distance(a, b), cosine_distance(a, c), cosine_distance(b, c)})
      if (d < 0.0 || d > 2.0) range = false;
    if (std::abs(cosine_distance(a_scaled, b) - cosine_distance(a, b)) > 1e-12) scale = false;
  }
  o.require(symmetric, "symmetry");
  o.require(triangle, "triangle inequality");
  o.require(range, "cosine range");
  o.require(scale, "cosine scale invariance");
  if (o.pass) o.detail = "10000 triples";
  return o;
}

Outcome clustering_oracles() {
  Outcome o;
  const std::vector<double> pts = {0.0, 0.1, 10.0, 10.1};
  const ClusterModel m = kmeans_fit(pts, 4, 1, 2, 0);
  std::vector<double> cs = m.centroids;
  std::sort(cs.begin(), cs.end());
  o.require(cs[0] == 0.05 && cs[1] == 10.05, "centroids " + std::to_string(cs[0]) + ", " + std::to_string(cs[1]));
  o.detail = "centroids {0.05, 10.05}";

  int non_monotone = 0;
  for (int inst = 0; inst < 100; ++inst) {
    Rng rng(400 + inst);
    const int rows = 50 + static_cast<int>(rng.uniform_int(0, 150));
    const int dim = 1 + static_cast<int>(rng.uniform_int(0, 4));
    const int k = 2 + static_cast<int>(rng.uniform_int(0, 4));
    std::vector<double> x(static_cast<std::size_t>(rows) * dim);
    for (auto& v : x) v = rng.normal() * 3.0;
    const ClusterModel km = kmeans_fit(x, rows, dim, k, inst);
    const auto& h = km.inertia_history;
    for (std::size_t i = 1; i < h.size(); ++i)
      if (h[i] > h[i - 1] * (1.0 + 1e-12)) {
        ++non_monotone;
        break;
      }
  }
  o.require(non_monotone == 0, std::to_string(non_monotone) + " instances with rising inertia");

  Rng rng(31);
  const int rows = 500, dim = 6;
  std::vector<double> dir(dim), mean(dim), samples(static_cast<std::size_t>(rows) * dim);
  for (int j = 0; j < dim; ++j) {
    dir[j] = rng.normal();
    mean[j] = rng.uniform(-5, 5);
  }
  for (int i = 0; i < rows; ++i) {
    const double t = rng.normal() * 4.0;
    for (int j = 0; j < dim; ++j) samples[static_cast<std::size_t>(i) * dim + j] = mean[j] + t * dir[j];
  }
  const PCAModel p = pca_fit(samples, rows, dim, 3);
  const double ratio = p.explained_variance_ratio(0);
  o.require(ratio >= 0.99999, "rank-1 ratio " + std::to_string(ratio));
  if (o.pass) o.detail += fmt(", 100 monotone inertia runs, rank-1 ratio %.9f", ratio);
  return o;
}

Outcome evaluation_oracles() {
  Outcome o;
  const std::vector<double> perfect = {6, 5, 4, 3, 2, 1, 0};
  const std::vector<std::uint8_t> y = {1, 1, 1, 0, 0, 0, 0};
  o.require(auprc(pr_curve(perfect, y)) == 1.0, "perfect ranking");

  const std::vector<double> flat(7, 0.25);
  o.require(std::abs(auprc(pr_curve(flat, y)) - 3.0 / 7.0) <= 1e-12, "all-equal scores");

  const std::vector<double> hand = {0.9, 0.8, 0.7, 0.6};
  const std::vector<std::uint8_t> hand_y = {1, 0, 1, 0};
  const double hand_ap = auprc(pr_curve(hand, hand_y));
  o.require(std::abs(hand_ap - 0.8333333333) <= 1e-9, "hand case " + std::to_string(hand_ap));

  Rng rng(77);
  const int n = 2000;
  std::vector<double> scores(n);
  std::vector<std::uint8_t> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = rng.bernoulli(0.3) ? 1 : 0;
    scores[i] = std::round((rng.normal() + labels[i]) * 20.0) / 20.0;
  }
  const double base = auprc(pr_curve(scores, labels));
  const std::vector<std::function<double(double, double)>> shapes = {
      [](double s, double a) { return a * s + 1.0; },
      [](double s, double a) { return std::exp(a * s); },
      [](double s, double a) { return std::atan(a * s); },
      [](double s, double a) { return s * s * s + a * s; },
  };
  int variant = 0;
  for (int t = 0; t < 20; ++t) {
    const double a = rng.uniform(0.1, 3.0);
    const auto& f = shapes[t % shapes.size()];
    std::vector<double> mapped(n);
    for (int i = 0; i < n; ++i) mapped[i] = f(scores[i], a);
    if (auprc(pr_curve(mapped, labels)) != base) ++variant;
  }
  o.require(variant == 0, std::to_string(variant) + " transforms changed AUPRC");
  if (o.pass) o.detail = fmt("hand case %.10f, 20 transforms", hand_ap);
  return o;
}

struct ExperimentResult {
  double auprc = 0.0;
  double dndvi_auprc = 0.0;
  double macro_f1 = 0.0;
  std::array<double, 3> f1{};
  double seconds = 0.0;
  int epochs = 0;
};

constexpr std::uint64_t kExperimentTrainSeed = 0;
constexpr int kExperimentEpochs = 20;

ExperimentResult run_experiment(const fs::path& out) {
  const auto t0 = Clock::now();
  fs::create_directories(out);
  const SynthSpec base;
  const std::vector<std::uint64_t> train_keys = {1, 2, 3, 4};
  const CorpusPlan plan = plan_corpus(CorpusMode::global, base, train_keys, 99);
  const auto pairs = generate_training_corpus(plan.train);
  const auto scenes = corpus_scenes(pairs);
  const NormStats stats = compute_norm_stats(scenes);
  save_norm_stats(stats, out / "norm_stats.json");

  std::vector<Tile> tiles;
  for (const auto& s : scenes) {
    TileSet ts = extract_tiles(normalize(s, stats), 8);
    std::move(ts.tiles.begin(), ts.tiles.end(), std::back_inserter(tiles));
  }

  TrainConfig cfg;
  cfg.temperature = 0.5;
  cfg.batch_size = 256;
  cfg.max_epochs = kExperimentEpochs;
  cfg.seed = kExperimentTrainSeed;
  cfg.threads = 1;
  const TrainResult trained = train(tiles, cfg, AugmentationConfig{});
  save_checkpoint(trained.params, out / "checkpoint.fclr");
  save_loss_history(trained.loss_history, out / "loss_history.csv");

  const SynthPair eval = generate_pair(plan.eval.at(0));
  const Scene pre = normalize(eval.pre, stats);
  const Scene post = normalize(eval.post, stats);
  const ChangeMap cm = change_map(trained.params, pre, post, 8, Metric::cosine, Representation::h, 1);
  save_change_map(cm, out / "change_map.tif");
  const std::vector<double> native = upsample_to_native(cm, pre.rows, pre.cols);

  EvalReport report;
  const PRCurve curve = pr_curve(native, eval.burned_mask);
  report.auprc = auprc(curve);
  report.ignored_pixels = curve.ignored;
  const SeverityResult sev = classify_severity(native, 3, 0);
  report.f1 = f1_per_class(sev.labels, eval.severity_mask);
  save_eval_report(report, out / "eval_report.json");

  const IndexMap d = diff_index(ndvi(eval.pre), ndvi(eval.post));

  ExperimentResult r;
  r.auprc = report.auprc;
  r.dndvi_auprc = auprc(pr_curve(d.values, eval.burned_mask));
  r.macro_f1 = report.f1->macro_f1();
  r.f1 = report.f1->f1;
  r.epochs = static_cast<int>(trained.loss_history.size());
  r.seconds = seconds_since(t0);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks; one PASS/FAIL line per criterion."};
  fs::path workdir = fs::temp_directory_path() / "fireclr_acceptance";
  std::vector<int> only;
  app.add_option("--workdir", workdir, "Directory for experiment artifacts");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  const auto wanted = [&](int c) { return selected.empty() || selected.count(c) != 0; };

  bool all_pass = true;
  const auto report = [&](int id, const std::string& name, const Outcome& o) {
    all_pass = all_pass && o.pass;
    std::printf("%s criterion %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  };
  const auto guarded = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    if (!wanted(id)) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    report(id, name, o);
  };

  guarded(1, "gradient oracle", gradient_oracle);
  guarded(2, "loss oracles", loss_oracles);
  guarded(3, "index invariants", index_invariants);
  guarded(4, "metric axioms", metric_axioms);
  guarded(5, "clustering and PCA oracles", clustering_oracles);
  guarded(6, "evaluation oracles", evaluation_oracles);

  if (wanted(7) || wanted(8)) {
    std::optional<ExperimentResult> first;
    std::string error;
    try {
      first = run_experiment(workdir / "run1");
    } catch (const std::exception& e) {
      error = e.what();
    }
    if (wanted(7)) {
      Outcome o;
      if (!first) {
        o.require(false, "exception: " + error);
      } else {
        const auto& r = *first;
        o.require(r.auprc >= 0.90, "(a) AUPRC below 0.90");
        o.require(r.auprc >= r.dndvi_auprc - 0.02, "(b) AUPRC below dNDVI - 0.02");
        o.require(r.macro_f1 >= 0.70, "(c) macro-F1 below 0.70");
        o.require(r.seconds <= 1800.0, "runtime above 30 min");
        o.detail += (o.detail.empty() ? "" : "; ") + fmt("AUPRC %.4f", r.auprc) + fmt(", dNDVI AUPRC %.4f", r.dndvi_auprc) +
                    fmt(", macro-F1 %.4f", r.macro_f1) + fmt(" (unburned %.3f", r.f1[0]) +
                    fmt(", black_ash %.3f", r.f1[1]) + fmt(", white_ash %.3f)", r.f1[2]) +
                    ", " + std::to_string(r.epochs) + " epochs" + fmt(", %.0f s", r.seconds);
      }
      report(7, "end-to-end synthetic experiment", o);
    }
    if (wanted(8)) {
      Outcome o;
      try {
        if (!first) throw std::runtime_error("first run failed: " + error);
        run_experiment(workdir / "run2");
        for (const char* f : {"checkpoint.fclr", "change_map.tif", "eval_report.json"}) {
          const bool same = testing::read_bytes(workdir / "run1" / f) == testing::read_bytes(workdir / "run2" / f);
          o.require(same, std::string(f) + " differs");
        }
        if (o.pass) o.detail = "checkpoint, change map and report byte-identical";
      } catch (const std::exception& e) {
        o.require(false, std::string("exception: ") + e.what());
      }
      report(8, "determinism", o);
    }
  }

  guarded(9, "format round trips", [&] {
    Outcome o;
    testing::TempDir dir("fireclr-acceptance");
    int stats_bad = 0, tiles_bad = 0, ckpt_bad = 0;
    const std::vector<BandRole> roles = {BandRole::red, BandRole::green, BandRole::blue, BandRole::nir, BandRole::swir};
    for (int inst = 0; inst < 100; ++inst) {
      Rng rng(9000 + inst);

      NormStats stats;
      for (const BandRole r : roles) {
        if (!rng.bernoulli(0.7) && !stats.bands.empty()) continue;
        const double lo = rng.normal() * std::pow(10.0, rng.uniform(-6, 6));
        stats.bands[r] = {lo, lo + rng.uniform() * 1e3 + 1e-9};
      }
      const int ids = static_cast<int>(rng.uniform_int(0, 4));
      for (int i = 0; i < ids; ++i) stats.source_scene_ids.push_back("scene-" + std::to_string(rng.next_u64()));
      save_norm_stats(stats, dir / "stats.json");
      if (!(load_norm_stats(dir / "stats.json") == stats) || !(norm_stats_from_json(norm_stats_to_json(stats)) == stats))
        ++stats_bad;

      TileSet ts;
      ts.channels = static_cast<int>(rng.uniform_int(1, 5));
      ts.stride = static_cast<int>(rng.uniform_int(1, 32));
      ts.rows = 32 + ts.stride * static_cast<int>(rng.uniform_int(0, 2));
      ts.cols = 32 + ts.stride * static_cast<int>(rng.uniform_int(0, 2));
      ts.timestamp = Date::from_ymd(2000, 1, 1).plus_days(static_cast<int>(rng.uniform_int(0, 9000)));
      for (int i = 0; i < ts.grid_rows(); ++i)
        for (int j = 0; j < ts.grid_cols(); ++j) {
          Tile t;
          t.row = i * ts.stride;
          t.col = j * ts.stride;
          t.pixels.resize(static_cast<std::size_t>(ts.channels) * kTilePixels);
          for (auto& v : t.pixels) v = static_cast<float>(rng.normal() * 1e3);
          ts.tiles.push_back(std::move(t));
        }
      save_tileset(ts, dir / "t.tiles");
      const TileSet back = load_tileset(dir / "t.tiles");
      if (back.tiles != ts.tiles || back.stride != ts.stride || back.rows != ts.rows || back.cols != ts.cols ||
          back.channels != ts.channels || back.timestamp != ts.timestamp)
        ++tiles_bad;

      ArchDescriptor arch;
      arch.input_channels = static_cast<int>(rng.uniform_int(1, 6));
      arch.conv_channels.clear();
      const int blocks = static_cast<int>(rng.uniform_int(1, 4));
      for (int b = 0; b < blocks; ++b) arch.conv_channels.push_back(static_cast<int>(rng.uniform_int(1, 12)));
      arch.head_hidden = static_cast<int>(rng.uniform_int(1, 20));
      arch.projection_dim = static_cast<int>(rng.uniform_int(1, 20));
      EncoderParams params = init_encoder(arch, rng.next_u64());
      for (auto& t : params.tensors)
        for (auto& v : t) v = static_cast<float>(rng.normal());
      params.epochs_completed = static_cast<int>(rng.uniform_int(0, 300));
      save_checkpoint(params, dir / "c.fclr");
      const EncoderParams loaded = load_checkpoint(dir / "c.fclr", arch.input_channels);
      if (!(loaded.arch == params.arch) || loaded.tensors != params.tensors || loaded.seed != params.seed ||
          loaded.epochs_completed != params.epochs_completed)
        ++ckpt_bad;
    }
    o.require(stats_bad == 0, std::to_string(stats_bad) + " NormStats mismatches");
    o.require(tiles_bad == 0, std::to_string(tiles_bad) + " TileSet mismatches");
    o.require(ckpt_bad == 0, std::to_string(ckpt_bad) + " checkpoint mismatches");
    if (o.pass) o.detail = "100 instances each";
    return o;
  });

  return all_pass ? 0 : 1;
}
