#include "fireclr/tiling.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "binary_io.hpp"
#include "fireclr/error.hpp"

namespace fireclr {

namespace {

constexpr std::array<char, 8> kTileSetMagic = {'F', 'C', 'L', 'R', 'T', 'I', 'L', 'E'};
constexpr std::uint32_t kTileSetVersion = 1;

}  // namespace

TileSet extract_tiles(const Scene& scene, int stride) {
  if (stride < 1 || stride > kMaxStride)
    throw ConfigError("stride must lie in [1, " + std::to_string(kMaxStride) + "]");
  if (scene.rows < kTileSize || scene.cols < kTileSize)
    throw DataError("scene smaller than 32x32 cannot be tiled");
  if (scene.channels < 3) throw DataError("tiles need at least 3 bands");

  TileSet ts;
  ts.stride = stride;
  ts.rows = scene.rows;
  ts.cols = scene.cols;
  ts.channels = scene.channels;
  ts.scene_id = scene.scene_id;
  ts.timestamp = scene.timestamp;
  const int gr = ts.grid_rows();
  const int gc = ts.grid_cols();
  ts.tiles.resize(static_cast<std::size_t>(gr) * gc);
  for (int i = 0; i < gr; ++i) {
    for (int j = 0; j < gc; ++j) {
      Tile& t = ts.tiles[static_cast<std::size_t>(i) * gc + j];
      t.row = i * stride;
      t.col = j * stride;
      t.pixels.resize(static_cast<std::size_t>(scene.channels) * kTilePixels);
      for (int ch = 0; ch < scene.channels; ++ch)
        for (int r = 0; r < kTileSize; ++r)
          for (int c = 0; c < kTileSize; ++c)
            t.at(ch, r, c) = static_cast<float>(scene.at(ch, t.row + r, t.col + c));
    }
  }
  return ts;
}

std::vector<TilePair> pair_tiles(const TileSet& a, const TileSet& b) {
  if (a.stride != b.stride) throw DataError("stride mismatch");
  if (a.rows != b.rows || a.cols != b.cols) throw DataError("dimension mismatch");
  if (a.channels != b.channels) throw DataError("channel mismatch");
  if (!(a.timestamp < b.timestamp)) throw DataError("non-increasing timestamps");
  if (a.tiles.size() != b.tiles.size()) throw DataError("tile count mismatch");
  std::vector<TilePair> pairs(a.tiles.size());
  for (std::size_t i = 0; i < a.tiles.size(); ++i) {
    if (a.tiles[i].row != b.tiles[i].row || a.tiles[i].col != b.tiles[i].col)
      throw DataError("tile anchors do not match");
    pairs[i] = {&a.tiles[i], &b.tiles[i]};
  }
  return pairs;
}

void save_tileset(const TileSet& ts, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kTileSetMagic.data(), kTileSetMagic.size());
  detail::write_u32(out, kTileSetVersion);
  // The last four header bytes carry the acquisition date (days since 1970-01-01).
  detail::write_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(ts.timestamp.epoch_days())));
  detail::write_u32(out, static_cast<std::uint32_t>(ts.tiles.size()));
  detail::write_u32(out, static_cast<std::uint32_t>(ts.channels));
  detail::write_u32(out, static_cast<std::uint32_t>(ts.stride));
  detail::write_u32(out, static_cast<std::uint32_t>(ts.rows));
  detail::write_u32(out, static_cast<std::uint32_t>(ts.cols));
  const std::size_t per_tile = static_cast<std::size_t>(ts.channels) * kTilePixels;
  for (const Tile& t : ts.tiles) {
    if (t.pixels.size() != per_tile) throw DataError("tile channel count differs from tileset");
    detail::write_u32(out, static_cast<std::uint32_t>(t.row));
    detail::write_u32(out, static_cast<std::uint32_t>(t.col));
    detail::write_f32s(out, t.pixels);
  }
  if (!out) throw DataError("failed writing " + path.string());
}

TileSet load_tileset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kTileSetMagic)
    throw FormatError("not a TileSet file (bad magic): " + path.string());
  if (detail::read_u32(in) != kTileSetVersion) throw FormatError("unsupported TileSet version");
  TileSet ts;
  ts.timestamp = Date::from_epoch_days(static_cast<std::int32_t>(detail::read_u32(in)));
  const std::uint32_t count = detail::read_u32(in);
  ts.channels = static_cast<int>(detail::read_u32(in));
  ts.stride = static_cast<int>(detail::read_u32(in));
  ts.rows = static_cast<int>(detail::read_u32(in));
  ts.cols = static_cast<int>(detail::read_u32(in));
  if (ts.channels < 1 || ts.channels > 4096) throw FormatError("implausible channel count");
  const std::size_t per_tile = static_cast<std::size_t>(ts.channels) * kTilePixels;

  // Reject truncated files before allocating.
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(in.tellg() - here);
  in.seekg(here);
  if (remaining != static_cast<std::uint64_t>(count) * (8 + per_tile * 4))
    throw FormatError("truncated payload in " + path.string());

  ts.tiles.resize(count);
  for (Tile& t : ts.tiles) {
    t.row = static_cast<int>(detail::read_u32(in));
    t.col = static_cast<int>(detail::read_u32(in));
    t.pixels.resize(per_tile);
    detail::read_f32s(in, t.pixels);
  }
  ts.scene_id = path.stem().string();
  return ts;
}

}  // namespace fireclr
