#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fireclr/raster.hpp"

namespace fireclr {

inline constexpr int kTileSize = 32;
inline constexpr int kTilePixels = kTileSize * kTileSize;

/// A 32x32xC patch, channel-planar: pixels[(ch * 32 + r) * 32 + c].
struct Tile {
  int row = 0;  // anchor of the top-left pixel in the source grid
  int col = 0;
  std::vector<float> pixels;

  int channels() const { return static_cast<int>(pixels.size() / kTilePixels); }
  float at(int ch, int r, int c) const { return pixels[(static_cast<std::size_t>(ch) * kTileSize + r) * kTileSize + c]; }
  float& at(int ch, int r, int c) { return pixels[(static_cast<std::size_t>(ch) * kTileSize + r) * kTileSize + c]; }

  bool operator==(const Tile&) const = default;
};

/// Tiles of one scene in row-major anchor order.
struct TileSet {
  int stride = 8;
  int rows = 0;  // source grid dimensions
  int cols = 0;
  int channels = 0;
  std::string scene_id;  // not persisted by save_tileset
  Date timestamp;
  std::vector<Tile> tiles;

  /// Number of anchors per axis: floor((dim - 32) / stride) + 1.
  int grid_rows() const { return (rows - kTileSize) / stride + 1; }
  int grid_cols() const { return (cols - kTileSize) / stride + 1; }
};

/// Non-owning view of co-located tiles from an earlier and a later TileSet.
struct TilePair {
  const Tile* t1 = nullptr;
  const Tile* t2 = nullptr;
};

inline constexpr int kMaxStride = kTileSize * 4;

TileSet extract_tiles(const Scene& scene, int stride);
std::vector<TilePair> pair_tiles(const TileSet& a, const TileSet& b);

void save_tileset(const TileSet& ts, const std::filesystem::path& path);
TileSet load_tileset(const std::filesystem::path& path);

}  // namespace fireclr
