#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fireclr/encoder.hpp"
#include "fireclr/raster.hpp"
#include "fireclr/tiling.hpp"

namespace fireclr {

enum class Metric { cosine, euclidean };
enum class Representation { h, z };

std::string_view to_string(Metric m);
std::string_view to_string(Representation r);
Metric parse_metric(std::string_view s);
Representation parse_representation(std::string_view s);

/// Row-major embedding matrix, one row per tile.
struct EmbeddingMatrix {
  int rows = 0;
  int dim = 0;
  std::vector<float> values;

  std::span<const float> row(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
};

/// Inference-path embeddings (no augmentation) in tileset order.
EmbeddingMatrix embed_tiles(const EncoderParams& params, const TileSet& ts, Representation rep, int threads = 1);

/// 1 - u.v / (|u| |v|), clamped to [0, 2]. Throws DataError on zero norm or
/// length mismatch.
double cosine_distance(std::span<const double> u, std::span<const double> v);
double cosine_distance(std::span<const float> u, std::span<const float> v);
double euclidean_distance(std::span<const double> u, std::span<const double> v);
double euclidean_distance(std::span<const float> u, std::span<const float> v);

/// One change score per tile anchor, on a grid with stride-sized cells.
struct ChangeMap {
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<double> scores;  // row-major
  int stride = 8;
  int source_rows = 0;
  int source_cols = 0;
  GeoInfo geo;  // pixel_size = source pixel_size * stride, origin at the first anchor
  std::string crs_id;
  Metric metric = Metric::cosine;
  Representation representation = Representation::z;
  Date t1, t2;

  double at(int i, int j) const { return scores[static_cast<std::size_t>(i) * grid_cols + j]; }
};

/// Scores S(x) = d(f(x_t1), f(x_t2)) for every co-located tile pair. Both
/// scenes must be normalized with the same NormStats.
ChangeMap change_map(const EncoderParams& params, const Scene& scene_t1, const Scene& scene_t2, int stride,
                     Metric metric, Representation rep, int threads = 1);

/// Gives each native pixel the score of the tile whose center is nearest
/// (ties to the lower tile index); pixels outside every tile get NaN.
std::vector<double> upsample_to_native(const ChangeMap& cm, int rows, int cols);

void save_change_map(const ChangeMap& cm, const std::filesystem::path& path);
ChangeMap load_change_map(const std::filesystem::path& path);

}  // namespace fireclr
