#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fireclr/date.hpp"

namespace fireclr {

enum class BandRole { red, green, blue, nir, swir };

std::string_view to_string(BandRole role);
BandRole parse_band_role(std::string_view name);

/// Role -> channel index within a scene's pixel array.
using BandMap = std::map<BandRole, int>;

/// North-up geotransform. The origin is the outer corner of the top-left pixel.
struct GeoInfo {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_size = 1.0;  // meters

  bool operator==(const GeoInfo&) const = default;
};

/// A georeferenced rows x cols x channels reflectance grid. Pixels are stored
/// band-planar: value(b, r, c) = pixels[(b * rows + r) * cols + c].
struct Scene {
  int rows = 0;
  int cols = 0;
  int channels = 0;
  std::vector<double> pixels;
  BandMap band_map;
  GeoInfo geo;
  std::string crs_id;
  Date timestamp;
  std::string scene_id;
  // Fingerprint of the NormStats this scene was normalized with; empty when raw.
  std::string norm_fingerprint;

  double at(int band, int r, int c) const {
    return pixels[(static_cast<std::size_t>(band) * rows + r) * cols + c];
  }
  double& at(int band, int r, int c) {
    return pixels[(static_cast<std::size_t>(band) * rows + r) * cols + c];
  }
  std::span<const double> band(int b) const {
    return {pixels.data() + static_cast<std::size_t>(b) * rows * cols,
            static_cast<std::size_t>(rows) * cols};
  }
  std::span<double> band(int b) {
    return {pixels.data() + static_cast<std::size_t>(b) * rows * cols,
            static_cast<std::size_t>(rows) * cols};
  }

  bool has_role(BandRole role) const { return band_map.count(role) != 0; }
  /// Channel index for a role; throws DataError("missing band: <role>").
  int channel(BandRole role) const;

  /// Checks the structural invariants; throws DataError on violation.
  void validate() const;

  /// Georeferenced extent.
  double min_x() const { return geo.origin_x; }
  double max_x() const { return geo.origin_x + cols * geo.pixel_size; }
  double max_y() const { return geo.origin_y; }
  double min_y() const { return geo.origin_y - rows * geo.pixel_size; }
};

/// True when two scenes share dimensions, geotransform and CRS.
bool same_grid(const Scene& a, const Scene& b);

struct RegionOfInterest {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  void validate() const;
};

struct BandRange {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const BandRange&) const = default;
};

/// Global per-band extremes of a training set.
struct NormStats {
  std::map<BandRole, BandRange> bands;
  std::vector<std::string> source_scene_ids;

  bool operator==(const NormStats&) const = default;

  /// Stable 64-bit FNV-1a digest of the canonical JSON encoding, as hex.
  std::string fingerprint() const;
};

/// Reflectance conversion applied when the raster stores integers.
struct LoadOptions {
  double integer_scale = 10000.0;
  std::string scene_id;  // defaults to the file stem
};

Scene load_scene(const std::filesystem::path& path, const BandMap& band_map, Date timestamp,
                 const LoadOptions& options = {});

/// Writes all bands as float32, with scene metadata embedded in the
/// ImageDescription tag so load_scene_file() restores it.
void save_scene(const Scene& scene, const std::filesystem::path& path);

/// Loads a scene written by save_scene(), taking band roles, timestamp and
/// provenance from the embedded metadata.
Scene load_scene_file(const std::filesystem::path& path);

Scene clip(const Scene& scene, const RegionOfInterest& roi);
Scene resample_to(const Scene& scene, double target_pixel_size);

NormStats compute_norm_stats(std::span<const Scene> scenes);
Scene normalize(const Scene& scene, const NormStats& stats);

void save_norm_stats(const NormStats& stats, const std::filesystem::path& path);
NormStats load_norm_stats(const std::filesystem::path& path);
std::string norm_stats_to_json(const NormStats& stats);
NormStats norm_stats_from_json(std::string_view text);

}  // namespace fireclr
