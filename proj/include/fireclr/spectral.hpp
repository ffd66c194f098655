#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fireclr/raster.hpp"

namespace fireclr {

enum class IndexKind { ndvi, nbr, dndvi, dnbr };

std::string_view to_string(IndexKind kind);

/// Per-pixel spectral index values, NaN where undefined.
struct IndexMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major
  GeoInfo geo;
  std::string crs_id;
  IndexKind kind = IndexKind::ndvi;
  std::vector<Date> timestamps;  // one for a single date, two for a difference

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

/// Normalized difference (a - b) / (a + b); NaN when a + b == 0.
double normalized_difference(double a, double b);

IndexMap ndvi(const Scene& scene);
IndexMap nbr(const Scene& scene);

/// pre - post, so vegetation loss gives positive values.
IndexMap diff_index(const IndexMap& pre_map, const IndexMap& post_map);

}  // namespace fireclr
