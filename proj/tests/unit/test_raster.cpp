#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>
#include <tiffio.h>

#include "fireclr/error.hpp"
#include "fireclr/geotiff.hpp"
#include "fireclr/raster.hpp"
#include "test_support.hpp"

using namespace fireclr;
using fireclr::testing::random_scene;
using fireclr::testing::TempDir;

namespace {

// Writes a plain contiguous uint16 TIFF without georeferencing using libtiff directly.
void write_plain_u16(const std::filesystem::path& path, int rows, int cols, int bands,
                     const std::vector<std::uint16_t>& interleaved) {
  TIFF* tif = TIFFOpen(path.c_str(), "w");
  REQUIRE(tif != nullptr);
  TIFFSetField(tif, TIFFTAG_IMAGEWIDTH, cols);
  TIFFSetField(tif, TIFFTAG_IMAGELENGTH, rows);
  TIFFSetField(tif, TIFFTAG_SAMPLESPERPIXEL, bands);
  TIFFSetField(tif, TIFFTAG_BITSPERSAMPLE, 16);
  TIFFSetField(tif, TIFFTAG_SAMPLEFORMAT, SAMPLEFORMAT_UINT);
  TIFFSetField(tif, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
  TIFFSetField(tif, TIFFTAG_ROWSPERSTRIP, rows);
  for (int r = 0; r < rows; ++r) {
    auto* line = const_cast<std::uint16_t*>(interleaved.data() + static_cast<std::size_t>(r) * cols * bands);
    REQUIRE(TIFFWriteScanline(tif, line, r, 0) == 1);
  }
  TIFFClose(tif);
}

Scene small_scene(int rows, int cols, double pixel_size = 10.0) {
  Scene s = random_scene(rows, cols, 3);
  s.geo.pixel_size = pixel_size;
  for (std::size_t i = 0; i < s.pixels.size(); ++i) s.pixels[i] = static_cast<double>(i);
  return s;
}

}  // namespace

TEST_CASE("load_scene reads selected bands from a multiband GeoTIFF") {
  TempDir dir;
  RasterData raw;
  raw.rows = 4;
  raw.cols = 4;
  raw.bands = 2;
  raw.values.resize(32);
  for (std::size_t i = 0; i < raw.values.size(); ++i) raw.values[i] = 0.01 * static_cast<double>(i);
  raw.geo = {100.0, 200.0, 10.0};
  raw.crs_id = "EPSG:32610";
  write_geotiff(dir / "two.tif", raw, SampleType::f64);

  const Scene s = load_scene(dir / "two.tif", {{BandRole::red, 0}, {BandRole::nir, 1}}, Date::parse("2021-07-01"));
  CHECK(s.channels == 2);
  CHECK(s.rows == 4);
  CHECK(s.cols == 4);
  CHECK(s.at(s.channel(BandRole::nir), 2, 3) == raw.at(1, 2, 3));
  CHECK(s.at(s.channel(BandRole::red), 0, 1) == raw.at(0, 0, 1));
  CHECK(s.geo == raw.geo);
  CHECK(s.crs_id == "EPSG:32610");
  CHECK(s.scene_id == "two");
}

TEST_CASE("load_scene rejects out-of-range band indices") {
  TempDir dir;
  RasterData raw;
  raw.rows = raw.cols = 2;
  raw.bands = 4;
  raw.values.assign(16, 0.1);
  write_geotiff(dir / "four.tif", raw, SampleType::f32);
  try {
    load_scene(dir / "four.tif", {{BandRole::red, 0}, {BandRole::nir, 5}}, Date{});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("band index out of range") != std::string::npos);
  }
}

TEST_CASE("integer rasters are divided by the scale factor") {
  TempDir dir;
  write_plain_u16(dir / "u16.tif", 1, 2, 2, {5000, 1000, 2500, 10000});
  const Scene s = load_scene(dir / "u16.tif", {{BandRole::red, 0}, {BandRole::nir, 1}}, Date{});
  CHECK(s.at(0, 0, 0) == 0.5);
  CHECK(s.at(1, 0, 0) == 0.1);
  CHECK(s.at(0, 0, 1) == 0.25);
  CHECK(s.at(1, 0, 1) == 1.0);

  LoadOptions opts;
  opts.integer_scale = 5000.0;
  const Scene t = load_scene(dir / "u16.tif", {{BandRole::red, 0}}, Date{}, opts);
  CHECK(t.at(0, 0, 0) == 1.0);
}

TEST_CASE("missing files and missing roles raise DataError") {
  CHECK_THROWS_AS(load_scene("/nonexistent/scene.tif", {{BandRole::red, 0}}, Date{}), DataError);
  const Scene s = random_scene(4, 4, 1);
  try {
    (void)s.channel(BandRole::swir);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()) == "missing band: swir");
  }
}

TEST_CASE("save_scene and load_scene_file restore the scene") {
  TempDir dir;
  Scene s = random_scene(6, 5, 11, 0.0, 1.0, Date::parse("2019-09-03"));
  for (double& v : s.pixels) v = static_cast<float>(v);
  save_scene(s, dir / "s.tif");
  const Scene t = load_scene_file(dir / "s.tif");
  CHECK(t.pixels == s.pixels);
  CHECK(t.band_map == s.band_map);
  CHECK(t.timestamp == s.timestamp);
  CHECK(t.geo == s.geo);
  CHECK(t.crs_id == s.crs_id);
  CHECK(t.scene_id == s.scene_id);
}

TEST_CASE("clip to full bounds is the identity") {
  const Scene s = small_scene(4, 4);
  const Scene c = clip(s, {s.min_x(), s.min_y(), s.max_x(), s.max_y()});
  CHECK(c.rows == 4);
  CHECK(c.cols == 4);
  CHECK(c.pixels == s.pixels);
  CHECK(c.geo == s.geo);
}

TEST_CASE("clip to the left half keeps columns 0 and 1") {
  const Scene s = small_scene(4, 4);
  const Scene c = clip(s, {s.min_x(), s.min_y(), s.min_x() + 2 * s.geo.pixel_size, s.max_y()});
  REQUIRE(c.rows == 4);
  REQUIRE(c.cols == 2);
  for (int b = 0; b < s.channels; ++b)
    for (int r = 0; r < 4; ++r)
      for (int col = 0; col < 2; ++col) CHECK(c.at(b, r, col) == s.at(b, r, col));
  CHECK(c.geo.origin_x == s.geo.origin_x);
}

TEST_CASE("clip outside the scene fails and clip is idempotent") {
  const Scene s = small_scene(8, 8);
  try {
    clip(s, {s.max_x() + 10, s.min_y(), s.max_x() + 50, s.max_y()});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("empty intersection") != std::string::npos);
  }
  const RegionOfInterest roi{s.min_x() + 13, s.min_y() + 21, s.min_x() + 57, s.max_y() - 4};
  const Scene once = clip(s, roi);
  const Scene twice = clip(once, roi);
  CHECK(twice.rows == once.rows);
  CHECK(twice.cols == once.cols);
  CHECK(twice.pixels == once.pixels);
  CHECK(twice.geo == once.geo);
}

TEST_CASE("resample to the same pixel size is bit-identical") {
  const Scene s = random_scene(7, 9, 4);
  const Scene r = resample_to(s, s.geo.pixel_size);
  CHECK(r.pixels == s.pixels);
  CHECK(r.rows == s.rows);
}

TEST_CASE("nearest-neighbour upsampling repeats pixels in blocks") {
  Scene s = small_scene(2, 2, 20.0);
  const Scene r = resample_to(s, 10.0);
  REQUIRE(r.rows == 4);
  REQUIRE(r.cols == 4);
  for (int b = 0; b < s.channels; ++b)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(r.at(b, i, j) == s.at(b, i / 2, j / 2));
  CHECK(r.band_map == s.band_map);
  CHECK(r.timestamp == s.timestamp);
  CHECK(r.geo.pixel_size == 10.0);
}

TEST_CASE("downsampling samples even source pixels") {
  const Scene s = small_scene(4, 4, 10.0);
  const Scene r = resample_to(s, 20.0);
  REQUIRE(r.rows == 2);
  REQUIRE(r.cols == 2);
  CHECK(r.at(0, 0, 0) == s.at(0, 0, 0));
  CHECK(r.at(0, 0, 1) == s.at(0, 0, 2));
  CHECK(r.at(0, 1, 0) == s.at(0, 2, 0));
  CHECK(r.at(0, 1, 1) == s.at(0, 2, 2));
  CHECK_THROWS_AS(resample_to(s, 1000.0), DataError);
  CHECK_THROWS_AS(resample_to(s, 0.0), ConfigError);
}

TEST_CASE("norm stats take per-band extremes across scenes") {
  Scene a = random_scene(1, 2, 1);
  a.band(0)[0] = 0.1;
  a.band(0)[1] = 0.4;
  NormStats st = compute_norm_stats(std::vector<Scene>{a});
  CHECK(st.bands.at(BandRole::red).min == 0.1);
  CHECK(st.bands.at(BandRole::red).max == 0.4);

  Scene b = random_scene(1, 2, 2);
  b.band(0)[0] = 0.05;
  b.band(0)[1] = 0.6;
  st = compute_norm_stats(std::vector<Scene>{a, b});
  CHECK(st.bands.at(BandRole::red).min == 0.05);
  CHECK(st.bands.at(BandRole::red).max == 0.6);
}

TEST_CASE("constant band is degenerate") {
  Scene a = random_scene(3, 3, 1);
  for (double& v : a.band(1)) v = 0.3;
  try {
    compute_norm_stats(std::vector<Scene>{a});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("degenerate band") != std::string::npos);
  }
}

TEST_CASE("norm stats are permutation invariant") {
  std::vector<Scene> scenes;
  for (int i = 0; i < 5; ++i) scenes.push_back(random_scene(6, 6, 100 + i, -0.2 * i, 1.0 + 0.1 * i));
  const NormStats ref = compute_norm_stats(scenes);
  std::mt19937 gen(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(scenes.begin(), scenes.end(), gen);
    const NormStats st = compute_norm_stats(scenes);
    CHECK(st.bands == ref.bands);
  }
}

TEST_CASE("normalize maps endpoints, clamps and stays in the unit interval") {
  Scene s = random_scene(4, 4, 9, 0.2, 0.8);
  NormStats st = compute_norm_stats(std::vector<Scene>{s});
  const auto red = st.bands.at(BandRole::red);
  s.band(0)[0] = red.min;
  s.band(0)[1] = red.max;
  s.band(0)[2] = red.min - 0.5;
  s.band(0)[3] = red.max + 0.5;
  const Scene n = normalize(s, st);
  CHECK(n.band(0)[0] == 0.0);
  CHECK(n.band(0)[1] == 1.0);
  CHECK(n.band(0)[2] == 0.0);
  CHECK(n.band(0)[3] == 1.0);
  CHECK(n.norm_fingerprint == st.fingerprint());
  for (double v : n.pixels) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("identity stats leave unit-range values unchanged") {
  const Scene s = random_scene(5, 5, 12);
  NormStats st;
  for (const auto& [role, idx] : s.band_map) st.bands[role] = {0.0, 1.0};
  const Scene n = normalize(s, st);
  CHECK(n.pixels == s.pixels);
}

TEST_CASE("normalize requires every band in the stats") {
  const Scene s = random_scene(2, 2, 1);
  NormStats st;
  st.bands[BandRole::red] = {0.0, 1.0};
  CHECK_THROWS_AS(normalize(s, st), DataError);
}

TEST_CASE("norm stats JSON round trip and schema errors") {
  TempDir dir;
  NormStats st;
  st.bands[BandRole::red] = {0.1, 0.9};
  st.bands[BandRole::green] = {0.0123456789012345, 0.75};
  st.bands[BandRole::blue] = {1e-17, 0.3};
  st.bands[BandRole::nir] = {-0.1, 1.2};
  st.bands[BandRole::swir] = {0.2, 0.21};
  st.source_scene_ids = {"a", "b"};
  save_norm_stats(st, dir / "stats.json");
  const NormStats back = load_norm_stats(dir / "stats.json");
  CHECK(back == st);
  CHECK(back.fingerprint() == st.fingerprint());

  const auto j = nlohmann::json::parse(norm_stats_to_json(st));
  CHECK(j.at("bands").size() == 5);

  CHECK_THROWS_AS(norm_stats_from_json(R"({"version":1})"), FormatError);
  CHECK_THROWS_AS(norm_stats_from_json(R"({"version":99,"bands":{}})"), FormatError);
  CHECK_THROWS_AS(norm_stats_from_json("{not json"), FormatError);
}

TEST_CASE("same_grid compares dimensions, geotransform and CRS") {
  const Scene a = random_scene(4, 4, 1);
  Scene b = random_scene(4, 4, 2);
  CHECK(same_grid(a, b));
  b.geo.origin_x += 10;
  CHECK_FALSE(same_grid(a, b));
  b = random_scene(4, 4, 2);
  b.crs_id = "EPSG:4326";
  CHECK_FALSE(same_grid(a, b));
}
