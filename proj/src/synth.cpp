#include "fireclr/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <queue>
#include <set>

#include <nlohmann/json.hpp>

#include "fireclr/error.hpp"
#include "fireclr/rng.hpp"

namespace fireclr {

namespace {

constexpr int kRed = 0, kGreen = 1, kBlue = 2, kNir = 3;
constexpr int kBands = 4;
constexpr double kMaxReflectance = 1.2;

// Endmember spectra (red, green, blue, nir) mixed by vegetation cover.
constexpr std::array<double, kBands> kVegetation = {0.04, 0.08, 0.03, 0.45};
constexpr std::array<double, kBands> kSoil = {0.22, 0.18, 0.14, 0.30};

std::vector<double> standardized_field(Rng& rng, int rows, int cols, double sigma) {
  std::vector<double> noise(static_cast<std::size_t>(rows) * cols);
  for (double& v : noise) v = rng.normal();
  auto f = gaussian_filter(noise, rows, cols, sigma);
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(f.size());
  double var = 0.0;
  for (double v : f) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(f.size()));
  for (double& v : f) v = sd > 0.0 ? (v - mean) / sd : 0.0;
  return f;
}

// Grows a 4-connected region from `start`, always absorbing the frontier
// pixel of lowest cost, until it holds `target` pixels.
std::vector<std::uint8_t> grow_region(const std::vector<double>& cost, int rows, int cols, int start,
                                      std::size_t target) {
  std::vector<std::uint8_t> inside(cost.size(), 0), queued(cost.size(), 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
  frontier.emplace(cost[start], start);
  queued[start] = 1;
  std::size_t grown = 0;
  while (grown < target && !frontier.empty()) {
    const int p = frontier.top().second;
    frontier.pop();
    inside[p] = 1;
    ++grown;
    const int r = p / cols, c = p % cols;
    const int nbrs[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& n : nbrs) {
      if (n[0] < 0 || n[0] >= rows || n[1] < 0 || n[1] >= cols) continue;
      const int q = n[0] * cols + n[1];
      if (queued[q]) continue;
      queued[q] = 1;
      frontier.emplace(cost[q], q);
    }
  }
  return inside;
}

// 4-connected distance (in px) from each region pixel to the nearest pixel
// outside it; the image border counts as outside.
std::vector<int> interior_depth(const std::vector<std::uint8_t>& region, int rows, int cols) {
  std::vector<int> depth(region.size(), 0);
  std::deque<int> queue;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int p = r * cols + c;
      if (!region[p]) continue;
      const bool edge = r == 0 || c == 0 || r == rows - 1 || c == cols - 1 || !region[p - 1] || !region[p + 1] ||
                        !region[p - cols] || !region[p + cols];
      if (edge) {
        depth[p] = 1;
        queue.push_back(p);
      }
    }
  while (!queue.empty()) {
    const int p = queue.front();
    queue.pop_front();
    const int r = p / cols, c = p % cols;
    const int nbrs[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& n : nbrs) {
      if (n[0] < 0 || n[0] >= rows || n[1] < 0 || n[1] >= cols) continue;
      const int q = n[0] * cols + n[1];
      if (region[q] && depth[q] == 0) {
        depth[q] = depth[p] + 1;
        queue.push_back(q);
      }
    }
  }
  return depth;
}

Scene empty_scene(const SynthSpec& spec, const char* tag, Date when) {
  Scene s;
  s.rows = spec.rows;
  s.cols = spec.cols;
  s.channels = kBands;
  s.pixels.assign(static_cast<std::size_t>(kBands) * spec.rows * spec.cols, 0.0);
  s.band_map = {{BandRole::red, kRed}, {BandRole::green, kGreen}, {BandRole::blue, kBlue}, {BandRole::nir, kNir}};
  s.geo.pixel_size = spec.pixel_size;
  s.geo.origin_x = 300000.0 + static_cast<double>(spec.seed % 1000) * spec.cols * spec.pixel_size;
  s.geo.origin_y = 4500000.0;
  s.crs_id = "EPSG:32611";
  s.timestamp = when;
  s.scene_id = "synth-s" + std::to_string(spec.seed) + "-k" + std::to_string(spec.snapshot) + "-" + tag;
  return s;
}

}  // namespace

void SynthSpec::validate() const {
  if (!(burn_fraction >= 0.0 && burn_fraction <= 1.0)) throw ConfigError("burn_fraction must lie in [0, 1]");
  if (!(white_ash_fraction >= 0.0 && white_ash_fraction <= 1.0))
    throw ConfigError("white_ash_fraction must lie in [0, 1]");
  if (rows < 64 || cols < 64) throw ConfigError("rows and cols must be >= 64");
  if (snapshot < 0) throw ConfigError("snapshot must be >= 0");
  if (!(smoothness > 0.0)) throw ConfigError("smoothness must be > 0");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  if (!(brightness_lo > 0.0 && brightness_lo <= brightness_hi))
    throw ConfigError("brightness range must be positive with lo <= hi");
  if (!(pixel_size > 0.0)) throw ConfigError("pixel_size must be > 0");
  if (!(black_ash_nir_factor >= 0.0) || !(black_ash_visible_factor >= 0.0) || !(white_ash_nir_factor >= 0.0))
    throw ConfigError("ash factors must be >= 0");
}

void to_json(nlohmann::json& j, const SynthSpec& s) {
  j = nlohmann::json{{"seed", s.seed},
                     {"snapshot", s.snapshot},
                     {"rows", s.rows},
                     {"cols", s.cols},
                     {"burn_fraction", s.burn_fraction},
                     {"white_ash_fraction", s.white_ash_fraction},
                     {"smoothness", s.smoothness},
                     {"black_ash_nir_factor", s.black_ash_nir_factor},
                     {"black_ash_visible_factor", s.black_ash_visible_factor},
                     {"white_ash_nir_factor", s.white_ash_nir_factor},
                     {"white_ash_visible_offset", s.white_ash_visible_offset},
                     {"brightness_range", {s.brightness_lo, s.brightness_hi}},
                     {"noise_sigma", s.noise_sigma},
                     {"pixel_size", s.pixel_size}};
}

void from_json(const nlohmann::json& j, SynthSpec& s) {
  s = SynthSpec{};
  s.seed = j.value("seed", s.seed);
  s.snapshot = j.value("snapshot", s.snapshot);
  s.rows = j.value("rows", s.rows);
  s.cols = j.value("cols", s.cols);
  s.burn_fraction = j.value("burn_fraction", s.burn_fraction);
  s.white_ash_fraction = j.value("white_ash_fraction", s.white_ash_fraction);
  s.smoothness = j.value("smoothness", s.smoothness);
  s.black_ash_nir_factor = j.value("black_ash_nir_factor", s.black_ash_nir_factor);
  s.black_ash_visible_factor = j.value("black_ash_visible_factor", s.black_ash_visible_factor);
  s.white_ash_nir_factor = j.value("white_ash_nir_factor", s.white_ash_nir_factor);
  s.white_ash_visible_offset = j.value("white_ash_visible_offset", s.white_ash_visible_offset);
  if (j.contains("brightness_range")) {
    auto r = j.at("brightness_range").get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError("brightness_range needs two values");
    s.brightness_lo = r[0];
    s.brightness_hi = r[1];
  }
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.pixel_size = j.value("pixel_size", s.pixel_size);
  s.validate();
}

std::vector<double> gaussian_filter(std::span<const double> grid, int rows, int cols, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * n - 2 - i;
    return i;
  };
  std::vector<double> tmp(grid.size()), out(grid.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * grid[static_cast<std::size_t>(r) * cols + reflect(c + k, cols)];
      tmp[static_cast<std::size_t>(r) * cols + c] = acc;
    }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * tmp[static_cast<std::size_t>(reflect(r + k, rows)) * cols + c];
      out[static_cast<std::size_t>(r) * cols + c] = acc;
    }
  return out;
}

SynthPair generate_pair(const SynthSpec& spec) {
  spec.validate();
  const int rows = spec.rows, cols = spec.cols;
  const std::size_t n = static_cast<std::size_t>(rows) * cols;

  Rng geo_rng(mix64(spec.seed) ^ 0x67656f677261ULL);
  const auto cover_field = standardized_field(geo_rng, rows, cols, spec.smoothness);
  const auto texture_field = standardized_field(geo_rng, rows, cols, spec.smoothness / 2.0);
  const auto burn_field = standardized_field(geo_rng, rows, cols, spec.smoothness * 2.0);

  // Noise-free pre-fire reflectance.
  std::vector<std::array<double, kBands>> base(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double cover = 1.0 / (1.0 + std::exp(-(1.5 * cover_field[p] + 0.8)));
    const double shade = 1.0 + 0.08 * texture_field[p];
    for (int b = 0; b < kBands; ++b) base[p][b] = (cover * kVegetation[b] + (1.0 - cover) * kSoil[b]) * shade;
  }

  // Burn footprint: region grown from a point in the central half.
  const auto target = static_cast<std::size_t>(std::llround(spec.burn_fraction * static_cast<double>(n)));
  std::vector<std::uint8_t> burned(n, 0);
  std::vector<double> cost(n, 0.0);
  if (target > 0) {
    const int seed_r = static_cast<int>(geo_rng.uniform_int(rows / 4, 3 * rows / 4 - 1));
    const int seed_c = static_cast<int>(geo_rng.uniform_int(cols / 4, 3 * cols / 4 - 1));
    const double radius = std::sqrt(static_cast<double>(target) / 3.141592653589793);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const std::size_t p = static_cast<std::size_t>(r) * cols + c;
        cost[p] = std::hypot(r - seed_r, c - seed_c) / radius + 0.35 * burn_field[p];
      }
    burned = grow_region(cost, rows, cols, seed_r * cols + seed_c, target);
    const auto grown = static_cast<std::size_t>(std::count(burned.begin(), burned.end(), 1));
    if (2 * grown < target) throw DataError("burn blob growth reached less than half the target fraction");
  }

  // White-ash core: the lowest-cost burned pixels at least 3 px from the burn edge.
  std::vector<std::uint8_t> severity(n, static_cast<std::uint8_t>(SeverityClass::unburned));
  std::vector<std::size_t> burned_idx;
  for (std::size_t p = 0; p < n; ++p)
    if (burned[p]) {
      severity[p] = static_cast<std::uint8_t>(SeverityClass::black_ash);
      burned_idx.push_back(p);
    }
  if (!burned_idx.empty() && spec.white_ash_fraction > 0.0) {
    const auto depth = interior_depth(burned, rows, cols);
    std::vector<std::size_t> candidates;
    for (std::size_t p : burned_idx)
      if (depth[p] > 3) candidates.push_back(p);
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) { return cost[a] < cost[b]; });
    const auto white = std::min(candidates.size(), static_cast<std::size_t>(std::llround(
                                                       spec.white_ash_fraction * static_cast<double>(burned_idx.size()))));
    for (std::size_t i = 0; i < white; ++i) severity[candidates[i]] = static_cast<std::uint8_t>(SeverityClass::white_ash);
  }

  Rng nuisance = Rng::keyed(spec.seed, static_cast<std::uint64_t>(spec.snapshot), 1, 0);
  Rng pre_noise = Rng::keyed(spec.seed, static_cast<std::uint64_t>(spec.snapshot), 2, 0);
  Rng post_noise = Rng::keyed(spec.seed, static_cast<std::uint64_t>(spec.snapshot), 3, 0);
  const double brightness = nuisance.uniform(spec.brightness_lo, spec.brightness_hi);

  const Date pre_date = Date::from_ymd(2020, 6, 1).plus_days(7 * spec.snapshot);
  const Date post_date = Date::from_ymd(2020, 9, 1).plus_days(7 * spec.snapshot);
  SynthPair out{empty_scene(spec, "pre", pre_date), empty_scene(spec, "post", post_date), {}, {}, brightness};

  for (int b = 0; b < kBands; ++b) {
    auto pre_band = out.pre.band(b);
    auto post_band = out.post.band(b);
    const bool visible = b != kNir;
    for (std::size_t p = 0; p < n; ++p) {
      double post = base[p][b];
      switch (static_cast<SeverityClass>(severity[p])) {
        case SeverityClass::black_ash:
          post *= visible ? spec.black_ash_visible_factor : spec.black_ash_nir_factor;
          break;
        case SeverityClass::white_ash:
          post = visible ? post + spec.white_ash_visible_offset : post * spec.white_ash_nir_factor;
          break;
        default: break;
      }
      pre_band[p] = std::clamp(base[p][b] + spec.noise_sigma * pre_noise.normal(), 0.0, kMaxReflectance);
      post_band[p] = std::clamp(post * brightness + spec.noise_sigma * post_noise.normal(), 0.0, kMaxReflectance);
    }
  }
  out.burned_mask = std::move(burned);
  out.severity_mask = std::move(severity);
  return out;
}

CorpusPlan plan_corpus(CorpusMode mode, const SynthSpec& base, std::span<const std::uint64_t> train_keys,
                       std::uint64_t eval_key) {
  if (train_keys.empty()) throw ConfigError("corpus needs at least one training key");
  std::set<std::uint64_t> seen;
  for (auto k : train_keys)
    if (!seen.insert(k).second) throw ConfigError("duplicate training key " + std::to_string(k));
  if (seen.count(eval_key)) throw ConfigError("eval key " + std::to_string(eval_key) + " is also a training key");
  auto make = [&](std::uint64_t key) {
    SynthSpec s = base;
    if (mode == CorpusMode::global) {
      s.seed = key;
    } else {
      s.snapshot = static_cast<int>(key);
    }
    return s;
  };
  CorpusPlan plan;
  for (auto k : train_keys) plan.train.push_back(make(k));
  plan.eval.push_back(make(eval_key));
  return plan;
}

std::vector<SynthPair> generate_training_corpus(std::span<const SynthSpec> specs) {
  if (specs.empty()) throw ConfigError("corpus needs at least one spec");
  std::vector<SynthPair> pairs;
  pairs.reserve(specs.size());
  for (const auto& s : specs) pairs.push_back(generate_pair(s));
  return pairs;
}

std::vector<Scene> corpus_scenes(std::span<const SynthPair> pairs) {
  std::vector<Scene> scenes;
  for (const auto& p : pairs) {
    scenes.push_back(p.pre);
    scenes.push_back(p.post);
  }
  return scenes;
}

}  // namespace fireclr
