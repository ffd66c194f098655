#include "fireclr/spectral.hpp"

#include <cmath>
#include <limits>

#include "fireclr/error.hpp"

namespace fireclr {

namespace {

IndexMap normalized_difference_map(const Scene& scene, BandRole a, BandRole b, IndexKind kind) {
  const auto band_a = scene.band(scene.channel(a));
  const auto band_b = scene.band(scene.channel(b));
  IndexMap m;
  m.rows = scene.rows;
  m.cols = scene.cols;
  m.geo = scene.geo;
  m.crs_id = scene.crs_id;
  m.kind = kind;
  m.timestamps = {scene.timestamp};
  m.values.resize(band_a.size());
  for (std::size_t i = 0; i < band_a.size(); ++i) m.values[i] = normalized_difference(band_a[i], band_b[i]);
  return m;
}

}  // namespace

std::string_view to_string(IndexKind kind) {
  switch (kind) {
    case IndexKind::ndvi: return "ndvi";
    case IndexKind::nbr: return "nbr";
    case IndexKind::dndvi: return "dndvi";
    case IndexKind::dnbr: return "dnbr";
  }
  return "?";
}

double normalized_difference(double a, double b) {
  const double sum = a + b;
  if (sum == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (a - b) / sum;
}

IndexMap ndvi(const Scene& scene) {
  return normalized_difference_map(scene, BandRole::nir, BandRole::red, IndexKind::ndvi);
}

IndexMap nbr(const Scene& scene) {
  return normalized_difference_map(scene, BandRole::nir, BandRole::swir, IndexKind::nbr);
}

IndexMap diff_index(const IndexMap& pre_map, const IndexMap& post_map) {
  if (pre_map.kind != post_map.kind) throw DataError("index kind mismatch");
  if (pre_map.kind != IndexKind::ndvi && pre_map.kind != IndexKind::nbr)
    throw DataError("diff_index expects single-date ndvi or nbr maps");
  if (pre_map.rows != post_map.rows || pre_map.cols != post_map.cols || !(pre_map.geo == post_map.geo))
    throw DataError("grid mismatch");
  IndexMap d = pre_map;
  d.kind = pre_map.kind == IndexKind::ndvi ? IndexKind::dndvi : IndexKind::dnbr;
  d.timestamps = {pre_map.timestamps.front(), post_map.timestamps.front()};
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = pre_map.values[i] - post_map.values[i];
  return d;
}

}  // namespace fireclr
