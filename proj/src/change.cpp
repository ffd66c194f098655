#include "fireclr/change.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "fireclr/error.hpp"
#include "fireclr/geotiff.hpp"
#include "fireclr/parallel.hpp"

namespace fireclr {

namespace {

constexpr int kInferenceChunk = 256;

template <typename A, typename B>
double cosine_impl(std::span<const A> u, std::span<const B> v) {
  if (u.size() != v.size()) throw DataError("length mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i], b = v[i];
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (!(nu > 0.0) || !(nv > 0.0)) throw DataError("zero-norm vector");
  // sqrt(nu * nu) == nu exactly, so identical inputs give exactly 0.
  return std::clamp(1.0 - dot / std::sqrt(nu * nv), 0.0, 2.0);
}

template <typename A, typename B>
double euclidean_impl(std::span<const A> u, std::span<const B> v) {
  if (u.size() != v.size()) throw DataError("length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = static_cast<double>(u[i]) - static_cast<double>(v[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Index of the tile whose center (anchor + 15.5) is nearest to pixel x along
// one axis, or -1 when x lies outside every tile. Ties go to the lower index.
int nearest_tile(int x, int count, int stride) {
  if (x >= (count - 1) * stride + kTileSize) return -1;
  const double center_offset = (kTileSize - 1) / 2.0;
  int i = static_cast<int>(std::floor((x - center_offset) / stride));
  i = std::clamp(i, 0, count - 1);
  if (i + 1 < count) {
    const double d0 = std::abs(x - (i * stride + center_offset));
    const double d1 = std::abs(x - ((i + 1) * stride + center_offset));
    if (d1 < d0) ++i;
  }
  return i;
}

}  // namespace

std::string_view to_string(Metric m) { return m == Metric::cosine ? "cosine" : "euclidean"; }
std::string_view to_string(Representation r) { return r == Representation::h ? "h" : "z"; }

Metric parse_metric(std::string_view s) {
  if (s == "cosine") return Metric::cosine;
  if (s == "euclidean") return Metric::euclidean;
  throw ConfigError("unknown metric '" + std::string(s) + "' (expected cosine or euclidean)");
}

Representation parse_representation(std::string_view s) {
  if (s == "h") return Representation::h;
  if (s == "z") return Representation::z;
  throw ConfigError("unknown representation '" + std::string(s) + "' (expected h or z)");
}

double cosine_distance(std::span<const double> u, std::span<const double> v) { return cosine_impl(u, v); }
double cosine_distance(std::span<const float> u, std::span<const float> v) { return cosine_impl(u, v); }
double euclidean_distance(std::span<const double> u, std::span<const double> v) { return euclidean_impl(u, v); }
double euclidean_distance(std::span<const float> u, std::span<const float> v) { return euclidean_impl(u, v); }

EmbeddingMatrix embed_tiles(const EncoderParams& params, const TileSet& ts, Representation rep, int threads) {
  if (ts.channels != params.arch.input_channels)
    throw DataError("channel mismatch: encoder expects " + std::to_string(params.arch.input_channels) +
                    " channels, tiles have " + std::to_string(ts.channels));
  EmbeddingMatrix out;
  out.rows = static_cast<int>(ts.tiles.size());
  out.dim = rep == Representation::h ? params.arch.embedding_dim() : params.arch.projection_dim;
  out.values.resize(static_cast<std::size_t>(out.rows) * out.dim);
  const std::size_t chunks = (ts.tiles.size() + kInferenceChunk - 1) / kInferenceChunk;
  parallel_for(chunks, threads, [&](std::size_t ci) {
    const std::size_t begin = ci * kInferenceChunk;
    const std::size_t end = std::min(ts.tiles.size(), begin + kInferenceChunk);
    std::vector<const Tile*> ptrs;
    for (std::size_t i = begin; i < end; ++i) ptrs.push_back(&ts.tiles[i]);
    const auto batch = pack_tiles(ptrs);
    const auto emb = forward<float>(params, batch, static_cast<int>(ptrs.size()));
    const auto& src = rep == Representation::h ? emb.h : emb.z;
    std::copy(src.begin(), src.end(), out.values.begin() + begin * out.dim);
  });
  return out;
}

ChangeMap change_map(const EncoderParams& params, const Scene& scene_t1, const Scene& scene_t2, int stride,
                     Metric metric, Representation rep, int threads) {
  if (!same_grid(scene_t1, scene_t2) || scene_t1.channels != scene_t2.channels) throw DataError("grid mismatch");
  if (scene_t1.norm_fingerprint.empty() || scene_t2.norm_fingerprint.empty())
    throw DataError("scenes must be normalized before change scoring");
  if (scene_t1.norm_fingerprint != scene_t2.norm_fingerprint)
    throw DataError("normalization stats mismatch between scenes");
  const TileSet a = extract_tiles(scene_t1, stride);
  const TileSet b = extract_tiles(scene_t2, stride);
  const auto pairs = pair_tiles(a, b);
  const auto ea = embed_tiles(params, a, rep, threads);
  const auto eb = embed_tiles(params, b, rep, threads);

  ChangeMap cm;
  cm.grid_rows = a.grid_rows();
  cm.grid_cols = a.grid_cols();
  cm.stride = stride;
  cm.source_rows = scene_t1.rows;
  cm.source_cols = scene_t1.cols;
  cm.geo = {scene_t1.geo.origin_x, scene_t1.geo.origin_y, scene_t1.geo.pixel_size * stride};
  cm.crs_id = scene_t1.crs_id;
  cm.metric = metric;
  cm.representation = rep;
  cm.t1 = scene_t1.timestamp;
  cm.t2 = scene_t2.timestamp;
  cm.scores.resize(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const int r = static_cast<int>(i);
    cm.scores[i] = metric == Metric::cosine ? cosine_distance(ea.row(r), eb.row(r))
                                            : euclidean_distance(ea.row(r), eb.row(r));
  }
  return cm;
}

std::vector<double> upsample_to_native(const ChangeMap& cm, int rows, int cols) {
  if (rows != cm.source_rows || cols != cm.source_cols)
    throw DataError("dimension mismatch: change map was computed on a " + std::to_string(cm.source_rows) + "x" +
                    std::to_string(cm.source_cols) + " grid");
  std::vector<int> row_tile(rows), col_tile(cols);
  for (int r = 0; r < rows; ++r) row_tile[r] = nearest_tile(r, cm.grid_rows, cm.stride);
  for (int c = 0; c < cols; ++c) col_tile[c] = nearest_tile(c, cm.grid_cols, cm.stride);
  std::vector<double> out(static_cast<std::size_t>(rows) * cols, std::numeric_limits<double>::quiet_NaN());
  for (int r = 0; r < rows; ++r) {
    if (row_tile[r] < 0) continue;
    for (int c = 0; c < cols; ++c)
      if (col_tile[c] >= 0) out[static_cast<std::size_t>(r) * cols + c] = cm.at(row_tile[r], col_tile[c]);
  }
  return out;
}

void save_change_map(const ChangeMap& cm, const std::filesystem::path& path) {
  nlohmann::json meta{{"fireclr_change_map", 1},
                      {"stride", cm.stride},
                      {"source_rows", cm.source_rows},
                      {"source_cols", cm.source_cols},
                      {"metric", to_string(cm.metric)},
                      {"representation", to_string(cm.representation)},
                      {"t1", cm.t1.to_string()},
                      {"t2", cm.t2.to_string()}};
  RasterData raster;
  raster.rows = cm.grid_rows;
  raster.cols = cm.grid_cols;
  raster.bands = 1;
  raster.values = cm.scores;
  raster.geo = cm.geo;
  raster.crs_id = cm.crs_id;
  raster.description = meta.dump();
  write_geotiff(path, raster, SampleType::f32);
}

ChangeMap load_change_map(const std::filesystem::path& path) {
  RasterData raster = read_geotiff(path);
  ChangeMap cm;
  try {
    const auto meta = nlohmann::json::parse(raster.description);
    if (meta.at("fireclr_change_map") != 1) throw FormatError("unsupported change map version");
    cm.stride = meta.at("stride").get<int>();
    cm.source_rows = meta.at("source_rows").get<int>();
    cm.source_cols = meta.at("source_cols").get<int>();
    cm.metric = parse_metric(meta.at("metric").get<std::string>());
    cm.representation = parse_representation(meta.at("representation").get<std::string>());
    cm.t1 = Date::parse(meta.at("t1").get<std::string>());
    cm.t2 = Date::parse(meta.at("t2").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + " is not a change map: " + e.what());
  }
  if (raster.bands != 1) throw FormatError("change map must be single-band");
  cm.grid_rows = raster.rows;
  cm.grid_cols = raster.cols;
  cm.scores = std::move(raster.values);
  cm.geo = raster.geo;
  cm.crs_id = raster.crs_id;
  return cm;
}

}  // namespace fireclr
