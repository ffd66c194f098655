#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "fireclr/raster.hpp"

namespace fireclr {

enum class Colormap { grayscale, viridis_like };

std::string_view to_string(Colormap c);
/// Accepts "grayscale" and "viridis-like".
Colormap parse_colormap(std::string_view s);

/// Entry i of the shipped 256-entry viridis-like table.
std::array<std::uint8_t, 3> viridis_like(int i);

struct ScoreRange {
  double lo = 0.0;
  double hi = 1.0;
};

/// Default display range: 0 to the largest finite value (1 when none is positive).
ScoreRange default_range(std::span<const double> values);

/// 8-bit PNG of a row-major score grid. Values are mapped linearly from
/// range.lo (black / first colormap entry) to range.hi (white / last entry)
/// and clamped; NaN pixels are fully transparent.
void write_score_png(const std::filesystem::path& path, std::span<const double> values, int rows, int cols,
                     Colormap colormap, std::optional<ScoreRange> range = std::nullopt);

/// Fixed severity palette.
inline constexpr std::array<std::uint8_t, 3> kUnburnedColor = {46, 139, 87};
inline constexpr std::array<std::uint8_t, 3> kBlackAshColor = {32, 32, 32};
inline constexpr std::array<std::uint8_t, 3> kWhiteAshColor = {240, 240, 240};

/// Paletted PNG: 0 unburned, 1 black_ash, 2 white_ash; 255 (invalid) transparent.
void write_severity_png(const std::filesystem::path& path, std::span<const std::uint8_t> labels, int rows, int cols);

/// Single-band uint8 GeoTIFF of label codes.
void write_label_geotiff(const std::filesystem::path& path, std::span<const std::uint8_t> labels, int rows, int cols,
                         const GeoInfo& geo, const std::string& crs_id, const std::string& description = {});

/// Single-band float32 GeoTIFF, NaN for invalid pixels.
void write_score_geotiff(const std::filesystem::path& path, std::span<const double> values, int rows, int cols,
                         const GeoInfo& geo, const std::string& crs_id, const std::string& description = {});

}  // namespace fireclr
