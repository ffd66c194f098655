#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "fireclr/augmentation.hpp"
#include "fireclr/error.hpp"
#include "test_support.hpp"

using namespace fireclr;

namespace {

Tile random_tile(std::uint64_t seed, int channels = 4) {
  Rng rng(seed);
  Tile t;
  t.pixels.resize(static_cast<std::size_t>(channels) * kTilePixels);
  for (float& v : t.pixels) v = static_cast<float>(rng.uniform());
  return t;
}

Tile constant_tile(float value, int channels = 4) {
  Tile t;
  t.pixels.assign(static_cast<std::size_t>(channels) * kTilePixels, value);
  return t;
}

Tile hot_pixel(int r, int c) {
  Tile t = constant_tile(0.0f, 3);
  for (int ch = 0; ch < 3; ++ch) t.at(ch, r, c) = 1.0f + ch;
  return t;
}

// Reference bilinear sampling of a side x side window: corner weights written out explicitly.
double bilinear_reference(const Tile& t, int ch, int row0, int col0, int side, int i, int j) {
  const auto coord = [side](int d) {
    double s = (d + 0.5) * side / 32.0 - 0.5;
    if (s < 0) s = 0;
    if (s > side - 1) s = side - 1;
    return s;
  };
  const double y = coord(i), x = coord(j);
  const int y0 = static_cast<int>(y), x0 = static_cast<int>(x);
  const int y1 = std::min(y0 + 1, side - 1), x1 = std::min(x0 + 1, side - 1);
  const double fy = y - y0, fx = x - x0;
  return (1 - fy) * (1 - fx) * t.at(ch, row0 + y0, col0 + x0) + (1 - fy) * fx * t.at(ch, row0 + y0, col0 + x1) +
         fy * (1 - fx) * t.at(ch, row0 + y1, col0 + x0) + fy * fx * t.at(ch, row0 + y1, col0 + x1);
}

std::vector<float> sorted_band(const Tile& t, int ch) {
  std::vector<float> v(t.pixels.begin() + static_cast<std::ptrdiff_t>(ch) * kTilePixels,
                       t.pixels.begin() + static_cast<std::ptrdiff_t>(ch + 1) * kTilePixels);
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("config validation and JSON round trip") {
  AugmentationConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.crop_scale_lo = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.crop_scale_lo = 0.9;
  cfg.crop_scale_hi = 0.8;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.blur_probability = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.blur_sigma_lo = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = {};
  cfg.crop_scale_lo = 0.6;
  cfg.rotation_angles = {0, 180};
  const nlohmann::json j = cfg;
  const auto back = j.get<AugmentationConfig>();
  CHECK(back.crop_scale_lo == 0.6);
  CHECK(back.rotation_angles == std::vector<int>{0, 180});
}

TEST_CASE("full-scale crop is the identity") {
  AugmentationConfig cfg;
  cfg.crop_scale_lo = cfg.crop_scale_hi = 1.0;
  const Tile t = random_tile(1);
  Rng rng(3);
  CHECK(random_crop_resize(t, rng, cfg) == t);
}

TEST_CASE("crop of a constant tile stays constant") {
  const Tile t = constant_tile(0.37f);
  AugmentationConfig cfg;
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const Tile out = random_crop_resize(t, rng, cfg);
    for (float v : out.pixels) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
  }
}

TEST_CASE("top-left 16x16 crop matches a reference bilinear resampler") {
  Tile grad = constant_tile(0.0f, 2);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) {
      grad.at(0, r, c) = static_cast<float>(0.01 * r + 0.02 * c);
      grad.at(1, r, c) = static_cast<float>(std::sin(0.3 * r) * std::cos(0.2 * c));
    }
  const Tile out = crop_resize(grad, 0, 0, 16);
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      CHECK(out.at(0, i, j) == doctest::Approx(bilinear_reference(grad, 0, 0, 0, 16, i, j)).epsilon(1e-6));
      CHECK(out.at(1, i, j) == doctest::Approx(bilinear_reference(grad, 1, 0, 0, 16, i, j)).epsilon(1e-5));
    }
  // Away from the clamped border a linear ramp is reproduced exactly.
  const double y = (10 + 0.5) * 0.5 - 0.5, x = (20 + 0.5) * 0.5 - 0.5;
  CHECK(out.at(0, 10, 20) == doctest::Approx(0.01 * y + 0.02 * x).epsilon(1e-6));

  const Tile t = random_tile(8, 3);
  const Tile off = crop_resize(t, 5, 9, 21);
  for (int i = 0; i < 32; i += 3)
    for (int j = 0; j < 32; j += 5)
      CHECK(off.at(2, i, j) == doctest::Approx(bilinear_reference(t, 2, 5, 9, 21, i, j)).epsilon(1e-5));
  CHECK_THROWS_AS(crop_resize(t, 20, 0, 16), ConfigError);
}

TEST_CASE("blur preserves constants and can be disabled") {
  const Tile c = constant_tile(0.5f);
  for (double s : {0.1, 1.0, 2.0})
    for (float v : blur(c, s).pixels) CHECK(v == doctest::Approx(0.5f).epsilon(1e-6));
  AugmentationConfig cfg;
  cfg.blur_probability = 0.0;
  const Tile t = random_tile(2);
  Rng rng(1);
  for (int k = 0; k < 10; ++k) CHECK(gaussian_blur(t, rng, cfg) == t);
}

TEST_CASE("impulse response equals independently computed Gaussian weights") {
  Tile t = constant_tile(0.0f, 3);
  t.at(1, 16, 16) = 1.0f;
  const Tile out = blur(t, 1.0);
  const double z = 1.0 + 4.0 * std::exp(-0.5) + 4.0 * std::exp(-1.0);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const double w = std::exp(-(dy * dy + dx * dx) / 2.0) / z;
      CHECK(out.at(1, 16 + dy, 16 + dx) == doctest::Approx(w).epsilon(1e-6));
    }
  CHECK(out.at(1, 16, 18) == 0.0f);
  CHECK(out.at(0, 16, 16) == 0.0f);
  double sum = 0;
  for (double w : gaussian_kernel3(0.7)) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("reflect-101 padding at the border") {
  Tile t = constant_tile(0.0f, 3);
  t.at(0, 1, 0) = 1.0f;
  const Tile out = blur(t, 1.0);
  const auto k = gaussian_kernel3(1.0);
  // Row -1 mirrors row 1, so the impulse at row 1 reaches row 0 twice.
  CHECK(out.at(0, 0, 0) == doctest::Approx(2 * k[7]).epsilon(1e-6));
}

TEST_CASE("flips") {
  const Tile t = random_tile(5);
  CHECK(flip_horizontal(flip_horizontal(t)) == t);
  CHECK(flip_vertical(flip_vertical(t)) == t);
  const Tile h = flip_horizontal(hot_pixel(0, 0));
  CHECK(h.at(0, 0, 31) == 1.0f);
  CHECK(h.at(2, 0, 31) == 3.0f);
  CHECK(h.at(0, 0, 0) == 0.0f);
  CHECK(flip_vertical(hot_pixel(0, 0)).at(1, 31, 0) == 2.0f);

  AugmentationConfig cfg;
  cfg.flip_probability = 0.0;
  Rng rng(1);
  CHECK(random_flip(t, rng, cfg) == t);
}

TEST_CASE("rotation convention and group closure") {
  const Tile t = random_tile(6);
  CHECK(rotate_quarter_turns(t, 0) == t);
  Tile r = t;
  for (int i = 0; i < 4; ++i) r = rotate_quarter_turns(r, 1);
  CHECK(r == t);
  CHECK(rotate_quarter_turns(t, 2) == rotate_quarter_turns(rotate_quarter_turns(t, 1), 1));
  CHECK(rotate_quarter_turns(t, -1) == rotate_quarter_turns(t, 3));
  const Tile hot = rotate_quarter_turns(hot_pixel(0, 0), 1);
  CHECK(hot.at(0, 0, 31) == 1.0f);
  CHECK(hot.at(2, 0, 31) == 3.0f);
  const Tile hot2 = rotate_quarter_turns(hot_pixel(3, 7), 1);
  CHECK(hot2.at(0, 7, 28) == 1.0f);

  AugmentationConfig cfg;
  cfg.rotation_angles = {0};
  Rng rng(2);
  CHECK(fixed_rotation(t, rng, cfg) == t);
}

TEST_CASE("views are deterministic per key and identity when disabled") {
  const Tile t = random_tile(7);
  const AugmentationConfig cfg;
  Rng a1 = Rng::keyed(9, 3, 11, 0), a2 = Rng::keyed(9, 3, 11, 1);
  Rng b1 = Rng::keyed(9, 3, 11, 0), b2 = Rng::keyed(9, 3, 11, 1);
  const auto va = make_views(t, a1, a2, cfg);
  const auto vb = make_views(t, b1, b2, cfg);
  CHECK(va.first == vb.first);
  CHECK(va.second == vb.second);
  CHECK_FALSE(va.first == va.second);

  const auto id = AugmentationConfig::identity();
  Rng c1(1), c2(2);
  const auto vi = make_views(t, c1, c2, id);
  CHECK(vi.first == t);
  CHECK(vi.second == t);
}

TEST_CASE("geometric-only views permute pixels within each band") {
  AugmentationConfig cfg = AugmentationConfig::identity();
  cfg.flip_probability = 0.5;
  cfg.rotation_angles = {0, 90, 180, 270};
  const Tile t = random_tile(10);
  for (std::uint64_t k = 0; k < 30; ++k) {
    Rng rng = Rng::keyed(1, 0, k, 0);
    const Tile v = make_view(t, rng, cfg);
    REQUIRE(v.pixels.size() == t.pixels.size());
    for (int ch = 0; ch < 4; ++ch) CHECK(sorted_band(v, ch) == sorted_band(t, ch));
  }
}

TEST_CASE("augmented views keep shape and stay within the input value range") {
  const Tile t = random_tile(11, 5);
  const auto [lo, hi] = std::minmax_element(t.pixels.begin(), t.pixels.end());
  const AugmentationConfig cfg;
  for (std::uint64_t k = 0; k < 30; ++k) {
    Rng rng = Rng::keyed(2, 1, k, 1);
    const Tile v = make_view(t, rng, cfg);
    CHECK(v.channels() == 5);
    for (float x : v.pixels) {
      CHECK(x >= *lo - 1e-6f);
      CHECK(x <= *hi + 1e-6f);
    }
  }
}
