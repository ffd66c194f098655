#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fireclr/raster.hpp"

namespace fireclr {

enum class SampleType { u8, u16, i16, u32, f32, f64 };

bool is_integer(SampleType t);

/// Raw band-planar raster as stored on disk.
struct RasterData {
  int rows = 0;
  int cols = 0;
  int bands = 0;
  std::vector<double> values;  // (band * rows + r) * cols + c
  SampleType sample_type = SampleType::f32;
  GeoInfo geo;
  std::string crs_id;
  std::string description;  // TIFF ImageDescription, empty if absent

  double at(int b, int r, int c) const {
    return values[(static_cast<std::size_t>(b) * rows + r) * cols + c];
  }
};

/// Reads uncompressed or compressed strip/tile TIFFs with either planar
/// configuration. Georeferencing is taken from ModelPixelScale /
/// ModelTiepoint; the CRS from the GeoKey directory (EPSG codes only).
RasterData read_geotiff(const std::filesystem::path& path);

/// Writes an uncompressed, band-separate (planar) GeoTIFF.
void write_geotiff(const std::filesystem::path& path, const RasterData& raster,
                   SampleType sample_type);

}  // namespace fireclr
