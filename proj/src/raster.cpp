#include "fireclr/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fireclr/error.hpp"
#include "fireclr/geotiff.hpp"

namespace fireclr {

using nlohmann::json;

namespace {

constexpr int kNormStatsVersion = 1;
constexpr int kSceneMetaVersion = 1;

// Snaps a coordinate ratio that is within rounding noise of an integer.
constexpr double kSnap = 1e-9;

}  // namespace

std::string_view to_string(BandRole role) {
  switch (role) {
    case BandRole::red: return "red";
    case BandRole::green: return "green";
    case BandRole::blue: return "blue";
    case BandRole::nir: return "nir";
    case BandRole::swir: return "swir";
  }
  return "?";
}

BandRole parse_band_role(std::string_view name) {
  for (BandRole r : {BandRole::red, BandRole::green, BandRole::blue, BandRole::nir, BandRole::swir})
    if (to_string(r) == name) return r;
  throw ConfigError("unknown band role '" + std::string(name) + "'");
}

int Scene::channel(BandRole role) const {
  auto it = band_map.find(role);
  if (it == band_map.end()) throw DataError("missing band: " + std::string(to_string(role)));
  return it->second;
}

void Scene::validate() const {
  if (rows < 1 || cols < 1 || channels < 1) throw DataError("scene must have H, W, C >= 1");
  if (pixels.size() != static_cast<std::size_t>(rows) * cols * channels)
    throw DataError("scene pixel buffer does not match its dimensions");
  if (!(geo.pixel_size > 0.0)) throw DataError("pixel size must be positive");
  std::set<int> used;
  for (const auto& [role, idx] : band_map) {
    if (idx < 0 || idx >= channels)
      throw DataError("band index out of range for role " + std::string(to_string(role)));
    if (!used.insert(idx).second) throw DataError("band roles must map to distinct channels");
  }
}

bool same_grid(const Scene& a, const Scene& b) {
  return a.rows == b.rows && a.cols == b.cols && a.geo == b.geo && a.crs_id == b.crs_id;
}

void RegionOfInterest::validate() const {
  if (!(max_x > min_x) || !(max_y > min_y)) throw ConfigError("region of interest has no area");
}

std::string NormStats::fingerprint() const {
  const std::string canonical = norm_stats_to_json(*this);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Scene load_scene(const std::filesystem::path& path, const BandMap& band_map, Date timestamp,
                 const LoadOptions& options) {
  RasterData raster = read_geotiff(path);
  for (const auto& [role, idx] : band_map) {
    if (idx < 0 || idx >= raster.bands)
      throw DataError("band index out of range: role " + std::string(to_string(role)) + " -> " +
                      std::to_string(idx) + " but file has " + std::to_string(raster.bands) + " bands");
  }
  if (!(options.integer_scale > 0.0)) throw ConfigError("integer scale must be positive");

  Scene s;
  s.rows = raster.rows;
  s.cols = raster.cols;
  s.channels = raster.bands;
  s.pixels = std::move(raster.values);
  if (is_integer(raster.sample_type)) {
    for (double& v : s.pixels) v /= options.integer_scale;
  }
  s.band_map = band_map;
  s.geo = raster.geo;
  s.crs_id = raster.crs_id;
  s.timestamp = timestamp;
  s.scene_id = options.scene_id.empty() ? path.stem().string() : options.scene_id;
  s.validate();
  return s;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  scene.validate();
  json meta;
  meta["fireclr_scene"] = kSceneMetaVersion;
  meta["scene_id"] = scene.scene_id;
  meta["timestamp"] = scene.timestamp.to_string();
  meta["crs_id"] = scene.crs_id;
  meta["norm_fingerprint"] = scene.norm_fingerprint;
  json bands = json::object();
  for (const auto& [role, idx] : scene.band_map) bands[std::string(to_string(role))] = idx;
  meta["band_map"] = bands;

  RasterData raster;
  raster.rows = scene.rows;
  raster.cols = scene.cols;
  raster.bands = scene.channels;
  raster.values = scene.pixels;
  raster.geo = scene.geo;
  raster.crs_id = scene.crs_id;
  raster.description = meta.dump();
  write_geotiff(path, raster, SampleType::f32);
}

Scene load_scene_file(const std::filesystem::path& path) {
  RasterData raster = read_geotiff(path);
  json meta;
  try {
    meta = json::parse(raster.description);
  } catch (const json::exception&) {
    throw DataError(path.string() + " carries no scene metadata; use load_scene with a band map");
  }
  if (!meta.contains("fireclr_scene") || meta["fireclr_scene"] != kSceneMetaVersion)
    throw DataError(path.string() + " carries no scene metadata; use load_scene with a band map");
  Scene s;
  s.rows = raster.rows;
  s.cols = raster.cols;
  s.channels = raster.bands;
  s.pixels = std::move(raster.values);
  s.geo = raster.geo;
  try {
    s.crs_id = meta.at("crs_id").get<std::string>();
    s.scene_id = meta.at("scene_id").get<std::string>();
    s.timestamp = Date::parse(meta.at("timestamp").get<std::string>());
    s.norm_fingerprint = meta.at("norm_fingerprint").get<std::string>();
    for (const auto& [name, idx] : meta.at("band_map").items())
      s.band_map[parse_band_role(name)] = idx.get<int>();
  } catch (const json::exception& e) {
    throw FormatError("malformed scene metadata in " + path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

Scene clip(const Scene& scene, const RegionOfInterest& roi) {
  roi.validate();
  const double ps = scene.geo.pixel_size;
  const int c0 = std::max(0, static_cast<int>(std::floor((roi.min_x - scene.geo.origin_x) / ps + kSnap)));
  const int c1 = std::min(scene.cols, static_cast<int>(std::ceil((roi.max_x - scene.geo.origin_x) / ps - kSnap)));
  const int r0 = std::max(0, static_cast<int>(std::floor((scene.geo.origin_y - roi.max_y) / ps + kSnap)));
  const int r1 = std::min(scene.rows, static_cast<int>(std::ceil((scene.geo.origin_y - roi.min_y) / ps - kSnap)));
  if (c1 <= c0 || r1 <= r0) throw DataError("empty intersection between region of interest and scene");

  Scene out = scene;
  out.rows = r1 - r0;
  out.cols = c1 - c0;
  out.pixels.assign(static_cast<std::size_t>(out.rows) * out.cols * out.channels, 0.0);
  for (int b = 0; b < scene.channels; ++b)
    for (int r = 0; r < out.rows; ++r)
      for (int c = 0; c < out.cols; ++c) out.at(b, r, c) = scene.at(b, r0 + r, c0 + c);
  out.geo.origin_x = scene.geo.origin_x + c0 * ps;
  out.geo.origin_y = scene.geo.origin_y - r0 * ps;
  return out;
}

Scene resample_to(const Scene& scene, double target_pixel_size) {
  if (!(target_pixel_size > 0.0)) throw ConfigError("target pixel size must be positive");
  const double ratio = scene.geo.pixel_size / target_pixel_size;
  const int rows = static_cast<int>(std::lround(scene.rows * ratio));
  const int cols = static_cast<int>(std::lround(scene.cols * ratio));
  if (rows < 1 || cols < 1) throw DataError("resampled output dimension would be zero");
  if (target_pixel_size == scene.geo.pixel_size) return scene;

  // Output pixel i samples source pixel floor(i * target / source).
  const double step = target_pixel_size / scene.geo.pixel_size;
  auto source_index = [&](int i, int limit) {
    return std::min(limit - 1, static_cast<int>(std::floor(i * step + kSnap)));
  };
  std::vector<int> src_rows(rows), src_cols(cols);
  for (int r = 0; r < rows; ++r) src_rows[r] = source_index(r, scene.rows);
  for (int c = 0; c < cols; ++c) src_cols[c] = source_index(c, scene.cols);

  Scene out = scene;
  out.rows = rows;
  out.cols = cols;
  out.geo.pixel_size = target_pixel_size;
  out.pixels.assign(static_cast<std::size_t>(rows) * cols * scene.channels, 0.0);
  for (int b = 0; b < scene.channels; ++b)
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) out.at(b, r, c) = scene.at(b, src_rows[r], src_cols[c]);
  return out;
}

NormStats compute_norm_stats(std::span<const Scene> scenes) {
  if (scenes.empty()) throw ConfigError("compute_norm_stats needs at least one scene");
  std::set<BandRole> roles;
  for (const auto& [role, idx] : scenes.front().band_map) roles.insert(role);
  NormStats stats;
  for (const Scene& s : scenes) {
    std::set<BandRole> these;
    for (const auto& [role, idx] : s.band_map) these.insert(role);
    if (these != roles) throw DataError("scenes do not share band roles");
    stats.source_scene_ids.push_back(s.scene_id);
  }
  std::sort(stats.source_scene_ids.begin(), stats.source_scene_ids.end());

  for (BandRole role : roles) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Scene& s : scenes) {
      for (double v : s.band(s.channel(role))) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!(hi > lo)) throw DataError("degenerate band: " + std::string(to_string(role)) + " has max == min");
    stats.bands[role] = {lo, hi};
  }
  return stats;
}

Scene normalize(const Scene& scene, const NormStats& stats) {
  Scene out = scene;
  for (const auto& [role, idx] : scene.band_map) {
    auto it = stats.bands.find(role);
    if (it == stats.bands.end())
      throw DataError("missing band in normalization stats: " + std::string(to_string(role)));
    const double lo = it->second.min;
    const double span = it->second.max - it->second.min;
    for (double& v : out.band(idx)) v = std::clamp((v - lo) / span, 0.0, 1.0);
  }
  out.norm_fingerprint = stats.fingerprint();
  return out;
}

std::string norm_stats_to_json(const NormStats& stats) {
  json j;
  j["version"] = kNormStatsVersion;
  json bands = json::object();
  for (const auto& [role, range] : stats.bands)
    bands[std::string(to_string(role))] = {{"min", range.min}, {"max", range.max}};
  j["bands"] = bands;
  j["source_scene_ids"] = stats.source_scene_ids;
  return j.dump(2);
}

NormStats norm_stats_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed NormStats JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("version")) throw FormatError("NormStats JSON lacks 'version'");
  if (j["version"] != kNormStatsVersion)
    throw FormatError("NormStats schema version mismatch: expected " + std::to_string(kNormStatsVersion));
  if (!j.contains("bands") || !j["bands"].is_object()) throw FormatError("NormStats JSON lacks 'bands'");
  NormStats stats;
  try {
    for (const auto& [name, range] : j["bands"].items()) {
      BandRange r{range.at("min").get<double>(), range.at("max").get<double>()};
      if (!(r.max > r.min)) throw FormatError("degenerate band in NormStats: " + name);
      stats.bands[parse_band_role(name)] = r;
    }
    if (j.contains("source_scene_ids"))
      stats.source_scene_ids = j["source_scene_ids"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed NormStats JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  return stats;
}

void save_norm_stats(const NormStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << norm_stats_to_json(stats) << '\n';
}

NormStats load_norm_stats(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return norm_stats_from_json(buf.str());
}

}  // namespace fireclr
