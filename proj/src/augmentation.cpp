#include "fireclr/augmentation.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "fireclr/error.hpp"

namespace fireclr {

void AugmentationConfig::validate() const {
  if (!(crop_scale_lo > 0.0 && crop_scale_lo <= crop_scale_hi && crop_scale_hi <= 1.0))
    throw ConfigError("crop_scale_range must satisfy 0 < lo <= hi <= 1");
  if (!(blur_probability >= 0.0 && blur_probability <= 1.0))
    throw ConfigError("blur_probability must lie in [0, 1]");
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
    throw ConfigError("flip_probability must lie in [0, 1]");
  if (!(blur_sigma_lo > 0.0 && blur_sigma_lo <= blur_sigma_hi))
    throw ConfigError("blur_sigma_range must be positive with lo <= hi");
  if (rotation_angles.empty()) throw ConfigError("rotation_angles must not be empty");
  for (int a : rotation_angles)
    if (a % 90 != 0) throw ConfigError("rotation_angles must be multiples of 90 degrees");
}

AugmentationConfig AugmentationConfig::identity() {
  AugmentationConfig cfg;
  cfg.crop_scale_lo = cfg.crop_scale_hi = 1.0;
  cfg.blur_probability = 0.0;
  cfg.flip_probability = 0.0;
  cfg.rotation_angles = {0};
  return cfg;
}

void to_json(nlohmann::json& j, const AugmentationConfig& cfg) {
  j = nlohmann::json{{"crop_scale_range", {cfg.crop_scale_lo, cfg.crop_scale_hi}},
                     {"blur_probability", cfg.blur_probability},
                     {"blur_sigma_range", {cfg.blur_sigma_lo, cfg.blur_sigma_hi}},
                     {"flip_probability", cfg.flip_probability},
                     {"rotation_angles", cfg.rotation_angles}};
}

void from_json(const nlohmann::json& j, AugmentationConfig& cfg) {
  cfg = AugmentationConfig{};
  if (j.contains("crop_scale_range")) {
    auto r = j.at("crop_scale_range").get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError("crop_scale_range needs two values");
    cfg.crop_scale_lo = r[0];
    cfg.crop_scale_hi = r[1];
  }
  if (j.contains("blur_sigma_range")) {
    auto r = j.at("blur_sigma_range").get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError("blur_sigma_range needs two values");
    cfg.blur_sigma_lo = r[0];
    cfg.blur_sigma_hi = r[1];
  }
  cfg.blur_probability = j.value("blur_probability", cfg.blur_probability);
  cfg.flip_probability = j.value("flip_probability", cfg.flip_probability);
  cfg.rotation_angles = j.value("rotation_angles", cfg.rotation_angles);
  cfg.validate();
}

Tile crop_resize(const Tile& tile, int row0, int col0, int side) {
  if (side < 1 || row0 < 0 || col0 < 0 || row0 + side > kTileSize || col0 + side > kTileSize)
    throw ConfigError("crop window outside tile");
  if (side == kTileSize) return tile;
  Tile out = tile;
  const int channels = tile.channels();
  const double scale = static_cast<double>(side) / kTileSize;
  // Source coordinate of output index d within the window, pixel-center aligned.
  struct Tap {
    int i0, i1;
    double w1;
  };
  std::array<Tap, kTileSize> taps{};
  for (int d = 0; d < kTileSize; ++d) {
    const double src = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(side - 1));
    const int i0 = static_cast<int>(std::floor(src));
    taps[d] = {i0, std::min(i0 + 1, side - 1), src - i0};
  }
  for (int ch = 0; ch < channels; ++ch) {
    for (int r = 0; r < kTileSize; ++r) {
      const Tap& ty = taps[r];
      for (int c = 0; c < kTileSize; ++c) {
        const Tap& tx = taps[c];
        const double v00 = tile.at(ch, row0 + ty.i0, col0 + tx.i0);
        const double v01 = tile.at(ch, row0 + ty.i0, col0 + tx.i1);
        const double v10 = tile.at(ch, row0 + ty.i1, col0 + tx.i0);
        const double v11 = tile.at(ch, row0 + ty.i1, col0 + tx.i1);
        const double top = v00 + (v01 - v00) * tx.w1;
        const double bottom = v10 + (v11 - v10) * tx.w1;
        out.at(ch, r, c) = static_cast<float>(top + (bottom - top) * ty.w1);
      }
    }
  }
  return out;
}

Tile random_crop_resize(const Tile& tile, Rng& rng, const AugmentationConfig& cfg) {
  const double area = rng.uniform(cfg.crop_scale_lo, cfg.crop_scale_hi);
  const int side = std::clamp(static_cast<int>(std::lround(kTileSize * std::sqrt(area))), 1, kTileSize);
  const int row0 = static_cast<int>(rng.uniform_int(0, kTileSize - side));
  const int col0 = static_cast<int>(rng.uniform_int(0, kTileSize - side));
  return crop_resize(tile, row0, col0, side);
}

std::array<double, 9> gaussian_kernel3(double sigma) {
  std::array<double, 9> k{};
  double sum = 0.0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const double w = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
      k[(dy + 1) * 3 + (dx + 1)] = w;
      sum += w;
    }
  for (double& w : k) w /= sum;
  return k;
}

Tile blur(const Tile& tile, double sigma) {
  const auto k = gaussian_kernel3(sigma);
  auto reflect = [](int i) { return i < 0 ? -i : (i >= kTileSize ? 2 * kTileSize - 2 - i : i); };
  Tile out = tile;
  for (int ch = 0; ch < tile.channels(); ++ch)
    for (int r = 0; r < kTileSize; ++r)
      for (int c = 0; c < kTileSize; ++c) {
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            acc += k[(dy + 1) * 3 + (dx + 1)] * tile.at(ch, reflect(r + dy), reflect(c + dx));
        out.at(ch, r, c) = static_cast<float>(acc);
      }
  return out;
}

Tile gaussian_blur(const Tile& tile, Rng& rng, const AugmentationConfig& cfg) {
  if (!rng.bernoulli(cfg.blur_probability)) return tile;
  return blur(tile, rng.uniform(cfg.blur_sigma_lo, cfg.blur_sigma_hi));
}

Tile flip_horizontal(const Tile& tile) {
  Tile out = tile;
  for (int ch = 0; ch < tile.channels(); ++ch)
    for (int r = 0; r < kTileSize; ++r)
      for (int c = 0; c < kTileSize; ++c) out.at(ch, r, c) = tile.at(ch, r, kTileSize - 1 - c);
  return out;
}

Tile flip_vertical(const Tile& tile) {
  Tile out = tile;
  for (int ch = 0; ch < tile.channels(); ++ch)
    for (int r = 0; r < kTileSize; ++r)
      for (int c = 0; c < kTileSize; ++c) out.at(ch, r, c) = tile.at(ch, kTileSize - 1 - r, c);
  return out;
}

Tile random_flip(const Tile& tile, Rng& rng, const AugmentationConfig& cfg) {
  const bool horizontal = rng.bernoulli(cfg.flip_probability);
  const bool vertical = rng.bernoulli(cfg.flip_probability);
  Tile out = horizontal ? flip_horizontal(tile) : tile;
  return vertical ? flip_vertical(out) : out;
}

Tile rotate_quarter_turns(const Tile& tile, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return tile;
  Tile out = tile;
  constexpr int n = kTileSize - 1;
  for (int ch = 0; ch < tile.channels(); ++ch)
    for (int r = 0; r < kTileSize; ++r)
      for (int c = 0; c < kTileSize; ++c) {
        int rr = r, cc = c;
        for (int t = 0; t < k; ++t) {
          const int nr = cc, nc = n - rr;
          rr = nr;
          cc = nc;
        }
        out.at(ch, rr, cc) = tile.at(ch, r, c);
      }
  return out;
}

Tile fixed_rotation(const Tile& tile, Rng& rng, const AugmentationConfig& cfg) {
  const auto idx = rng.uniform_int(0, static_cast<std::int64_t>(cfg.rotation_angles.size()) - 1);
  return rotate_quarter_turns(tile, cfg.rotation_angles[static_cast<std::size_t>(idx)] / 90);
}

Tile make_view(const Tile& tile, Rng& rng, const AugmentationConfig& cfg) {
  Tile v = random_crop_resize(tile, rng, cfg);
  v = gaussian_blur(v, rng, cfg);
  v = random_flip(v, rng, cfg);
  return fixed_rotation(v, rng, cfg);
}

std::pair<Tile, Tile> make_views(const Tile& tile, Rng& rng1, Rng& rng2, const AugmentationConfig& cfg) {
  return {make_view(tile, rng1, cfg), make_view(tile, rng2, cfg)};
}

}  // namespace fireclr
