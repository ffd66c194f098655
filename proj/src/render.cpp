#include "fireclr/render.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

#include "fireclr/error.hpp"
#include "fireclr/geotiff.hpp"

namespace fireclr {

namespace {

constexpr std::uint8_t kViridisLike[256][3] = {
#include "viridis_like.inc"
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

// Writes 8-bit rows with libpng. `palette` is used for PNG_COLOR_TYPE_PALETTE.
void write_png(const std::filesystem::path& path, int rows, int cols, int color_type,
               const std::vector<std::uint8_t>& data, int channels, const std::vector<png_color>& palette = {},
               const std::vector<png_byte>& trans = {}) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw DataError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("failed to encode PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (!palette.empty()) png_set_PLTE(png, info, palette.data(), static_cast<int>(palette.size()));
  if (!trans.empty()) png_set_tRNS(png, info, trans.data(), static_cast<int>(trans.size()), nullptr);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(cols) * channels;
  for (int r = 0; r < rows; ++r) png_write_row(png, data.data() + r * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void check_size(std::size_t n, int rows, int cols) {
  if (rows < 1 || cols < 1 || n != static_cast<std::size_t>(rows) * cols)
    throw DataError("raster size does not match " + std::to_string(rows) + "x" + std::to_string(cols));
}

}  // namespace

std::string_view to_string(Colormap c) { return c == Colormap::grayscale ? "grayscale" : "viridis-like"; }

Colormap parse_colormap(std::string_view s) {
  if (s == "grayscale") return Colormap::grayscale;
  if (s == "viridis-like") return Colormap::viridis_like;
  throw ConfigError("unknown colormap '" + std::string(s) + "' (expected grayscale or viridis-like)");
}

std::array<std::uint8_t, 3> viridis_like(int i) {
  i = std::clamp(i, 0, 255);
  return {kViridisLike[i][0], kViridisLike[i][1], kViridisLike[i][2]};
}

ScoreRange default_range(std::span<const double> values) {
  double hi = 0.0;
  for (double v : values)
    if (std::isfinite(v)) hi = std::max(hi, v);
  return {0.0, hi > 0.0 ? hi : 1.0};
}

void write_score_png(const std::filesystem::path& path, std::span<const double> values, int rows, int cols,
                     Colormap colormap, std::optional<ScoreRange> range) {
  check_size(values.size(), rows, cols);
  const ScoreRange rg = range.value_or(default_range(values));
  if (!(rg.hi > rg.lo)) throw ConfigError("display range must satisfy hi > lo");
  const int channels = colormap == Colormap::grayscale ? 2 : 4;
  std::vector<std::uint8_t> data(values.size() * channels, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint8_t* px = data.data() + i * channels;
    if (std::isnan(values[i])) continue;
    const double t = std::clamp((values[i] - rg.lo) / (rg.hi - rg.lo), 0.0, 1.0);
    const int level = static_cast<int>(std::lround(t * 255.0));
    if (colormap == Colormap::grayscale) {
      px[0] = static_cast<std::uint8_t>(level);
      px[1] = 255;
    } else {
      const auto rgb = viridis_like(level);
      std::copy(rgb.begin(), rgb.end(), px);
      px[3] = 255;
    }
  }
  write_png(path, rows, cols, colormap == Colormap::grayscale ? PNG_COLOR_TYPE_GRAY_ALPHA : PNG_COLOR_TYPE_RGB_ALPHA,
            data, channels);
}

void write_severity_png(const std::filesystem::path& path, std::span<const std::uint8_t> labels, int rows, int cols) {
  check_size(labels.size(), rows, cols);
  std::vector<png_color> palette(256, png_color{0, 0, 0});
  const auto set = [&](int i, const std::array<std::uint8_t, 3>& c) { palette[i] = png_color{c[0], c[1], c[2]}; };
  set(0, kUnburnedColor);
  set(1, kBlackAshColor);
  set(2, kWhiteAshColor);
  std::vector<png_byte> trans(256, 255);
  trans[255] = 0;
  for (std::uint8_t v : labels)
    if (v > 2 && v != 255) throw DataError("unknown label " + std::to_string(v) + " in severity map");
  write_png(path, rows, cols, PNG_COLOR_TYPE_PALETTE, std::vector<std::uint8_t>(labels.begin(), labels.end()), 1,
            palette, trans);
}

void write_label_geotiff(const std::filesystem::path& path, std::span<const std::uint8_t> labels, int rows, int cols,
                         const GeoInfo& geo, const std::string& crs_id, const std::string& description) {
  check_size(labels.size(), rows, cols);
  RasterData r;
  r.rows = rows;
  r.cols = cols;
  r.bands = 1;
  r.values.assign(labels.begin(), labels.end());
  r.geo = geo;
  r.crs_id = crs_id;
  r.description = description;
  write_geotiff(path, r, SampleType::u8);
}

void write_score_geotiff(const std::filesystem::path& path, std::span<const double> values, int rows, int cols,
                         const GeoInfo& geo, const std::string& crs_id, const std::string& description) {
  check_size(values.size(), rows, cols);
  RasterData r;
  r.rows = rows;
  r.cols = cols;
  r.bands = 1;
  r.values.assign(values.begin(), values.end());
  r.geo = geo;
  r.crs_id = crs_id;
  r.description = description;
  write_geotiff(path, r, SampleType::f32);
}

}  // namespace fireclr
