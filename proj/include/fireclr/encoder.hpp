#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fireclr/tiling.hpp"

namespace fireclr {

/// Convolutional encoder f and projection head g.
///
/// Each conv block is a 3x3 convolution with stride 2 and padding 1 followed
/// by ReLU, halving the spatial size (32 -> 16 -> 8 -> 4 -> 2 for the default
/// four blocks). Global average pooling of the last block gives the embedding
/// h; the head maps h through affine -> ReLU -> affine to the projection z.
struct ArchDescriptor {
  int input_channels = 4;
  std::vector<int> conv_channels = {32, 64, 128, 256};
  int head_hidden = 256;
  int projection_dim = 128;
  int input_size = kTileSize;

  int embedding_dim() const { return conv_channels.empty() ? 0 : conv_channels.back(); }
  /// Spatial size entering each block plus the final size; throws ConfigError
  /// if a block would reduce the size below 1.
  std::vector<int> spatial_sizes() const;
  void validate() const;
  /// Parameter tensor shapes in storage order: per block (weight, bias), then
  /// head hidden (weight, bias) and head output (weight, bias).
  std::vector<std::vector<int>> parameter_shapes() const;

  bool operator==(const ArchDescriptor&) const = default;
};

void to_json(nlohmann::json& j, const ArchDescriptor& arch);
void from_json(const nlohmann::json& j, ArchDescriptor& arch);

template <typename T>
struct EncoderParamsT {
  ArchDescriptor arch;
  std::vector<std::vector<T>> tensors;
  std::uint64_t seed = 0;
  int epochs_completed = 0;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
};

using EncoderParams = EncoderParamsT<float>;
using EncoderParams64 = EncoderParamsT<double>;

template <typename To, typename From>
EncoderParamsT<To> cast_params(const EncoderParamsT<From>& p) {
  EncoderParamsT<To> out;
  out.arch = p.arch;
  out.seed = p.seed;
  out.epochs_completed = p.epochs_completed;
  out.tensors.reserve(p.tensors.size());
  for (const auto& t : p.tensors) out.tensors.emplace_back(t.begin(), t.end());
  return out;
}

/// Weights ~ U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)) drawn in tensor order from
/// one stream seeded with `seed`; biases zero.
EncoderParams init_encoder(const ArchDescriptor& arch, std::uint64_t seed);

/// Row-major h (rows x embedding_dim) and z (rows x projection_dim).
template <typename T>
struct EmbeddingBatchT {
  int rows = 0;
  int h_dim = 0;
  int z_dim = 0;
  std::vector<T> h;
  std::vector<T> z;
};

using EmbeddingBatch = EmbeddingBatchT<float>;

/// Intermediates kept by forward() for backward().
template <typename T>
struct ForwardCache {
  int batch = 0;
  std::vector<std::vector<T>> cols;         // im2col matrix per block
  std::vector<std::vector<T>> activations;  // post-ReLU output per block, [C][B][H][W]
  std::vector<T> h;
  std::vector<T> hidden_pre;  // head hidden pre-activation
  std::vector<T> hidden;      // head hidden post-ReLU
  bool valid = false;
};

/// `input` holds `batch` samples of C x S x S values each (channel-planar).
template <typename T>
EmbeddingBatchT<T> forward(const EncoderParamsT<T>& params, std::span<const T> input, int batch,
                           ForwardCache<T>* cache = nullptr);

/// Gradients of a scalar loss with respect to every parameter tensor, given
/// dL/dz and optionally dL/dh (empty span for none).
template <typename T>
std::vector<std::vector<T>> backward(const EncoderParamsT<T>& params, const ForwardCache<T>& cache,
                                     std::span<const T> grad_z, std::span<const T> grad_h = {});

/// Copies tiles into a contiguous float batch buffer.
std::vector<float> pack_tiles(std::span<const Tile* const> tiles);

void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path);
/// expected_channels < 0 skips the channel check.
EncoderParams load_checkpoint(const std::filesystem::path& path, int expected_channels = -1);

}  // namespace fireclr
