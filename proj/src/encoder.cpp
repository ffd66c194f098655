#include "fireclr/encoder.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "fireclr/error.hpp"
#include "fireclr/rng.hpp"

namespace fireclr {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "fireclr-checkpoint";

// Tensor slots within EncoderParams::tensors.
int conv_weight_slot(int block) { return 2 * block; }
int conv_bias_slot(int block) { return 2 * block + 1; }
int head_slot(const ArchDescriptor& a, int k) { return 2 * static_cast<int>(a.conv_channels.size()) + k; }

// Gathers 3x3 / stride 2 / pad 1 patches: col[(ci*9 + ky*3 + kx)][(b*Ho + oy)*Wo + ox].
template <typename T>
void im2col(const T* act, int channels, int batch, int in_size, int out_size, T* col) {
  const std::size_t in_hw = static_cast<std::size_t>(in_size) * in_size;
  const std::size_t out_hw = static_cast<std::size_t>(out_size) * out_size;
  const std::size_t n = static_cast<std::size_t>(batch) * out_hw;
  for (int ci = 0; ci < channels; ++ci) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* row = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * n;
        for (int b = 0; b < batch; ++b) {
          const T* src = act + (static_cast<std::size_t>(ci) * batch + b) * in_hw;
          T* dst = row + b * out_hw;
          for (int oy = 0; oy < out_size; ++oy) {
            const int iy = 2 * oy + ky - 1;
            T* drow = dst + static_cast<std::size_t>(oy) * out_size;
            if (iy < 0 || iy >= in_size) {
              std::fill(drow, drow + out_size, T(0));
              continue;
            }
            const T* srow = src + static_cast<std::size_t>(iy) * in_size;
            for (int ox = 0; ox < out_size; ++ox) {
              const int ix = 2 * ox + kx - 1;
              drow[ox] = (ix >= 0 && ix < in_size) ? srow[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

// Row sums in a fixed order, independent of buffer alignment.
template <typename T>
void column_sums(const T* m, int rows, int cols, T* out) {
  std::fill_n(out, cols, T(0));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out[c] += m[static_cast<std::size_t>(r) * cols + c];
}

// Adjoint of im2col: scatter-adds patch gradients back onto the input grid.
template <typename T>
void col2im(const T* col, int channels, int batch, int in_size, int out_size, T* act) {
  const std::size_t in_hw = static_cast<std::size_t>(in_size) * in_size;
  const std::size_t out_hw = static_cast<std::size_t>(out_size) * out_size;
  const std::size_t n = static_cast<std::size_t>(batch) * out_hw;
  std::fill(act, act + static_cast<std::size_t>(channels) * batch * in_hw, T(0));
  for (int ci = 0; ci < channels; ++ci) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* row = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * n;
        for (int b = 0; b < batch; ++b) {
          T* dst = act + (static_cast<std::size_t>(ci) * batch + b) * in_hw;
          const T* src = row + b * out_hw;
          for (int oy = 0; oy < out_size; ++oy) {
            const int iy = 2 * oy + ky - 1;
            if (iy < 0 || iy >= in_size) continue;
            T* drow = dst + static_cast<std::size_t>(iy) * in_size;
            const T* srow = src + static_cast<std::size_t>(oy) * out_size;
            for (int ox = 0; ox < out_size; ++ox) {
              const int ix = 2 * ox + kx - 1;
              if (ix >= 0 && ix < in_size) drow[ix] += srow[ox];
            }
          }
        }
      }
    }
  }
}

}  // namespace

std::vector<int> ArchDescriptor::spatial_sizes() const {
  std::vector<int> sizes{input_size};
  for (std::size_t i = 0; i < conv_channels.size(); ++i) {
    const int in = sizes.back();
    if (in % 2 != 0 && in != 1) throw ConfigError("conv block input size must be even");
    const int out = in / 2;
    if (out < 1)
      throw ConfigError("spatial size underflow: " + std::to_string(conv_channels.size()) +
                        " stride-2 blocks reduce a " + std::to_string(input_size) + " px input below 1");
    sizes.push_back(out);
  }
  return sizes;
}

void ArchDescriptor::validate() const {
  if (input_channels < 1) throw ConfigError("input_channels must be >= 1");
  if (conv_channels.empty()) throw ConfigError("at least one conv block is required");
  for (int c : conv_channels)
    if (c < 1) throw ConfigError("conv block channels must be >= 1");
  if (head_hidden < 1 || projection_dim < 1) throw ConfigError("head dimensions must be >= 1");
  if (input_size < 1) throw ConfigError("input_size must be >= 1");
  spatial_sizes();
}

std::vector<std::vector<int>> ArchDescriptor::parameter_shapes() const {
  std::vector<std::vector<int>> shapes;
  int in = input_channels;
  for (int out : conv_channels) {
    shapes.push_back({out, in, 3, 3});
    shapes.push_back({out});
    in = out;
  }
  shapes.push_back({head_hidden, embedding_dim()});
  shapes.push_back({head_hidden});
  shapes.push_back({projection_dim, head_hidden});
  shapes.push_back({projection_dim});
  return shapes;
}

void to_json(nlohmann::json& j, const ArchDescriptor& a) {
  j = nlohmann::json{{"input_channels", a.input_channels},
                     {"conv_channels", a.conv_channels},
                     {"head_hidden", a.head_hidden},
                     {"projection_dim", a.projection_dim},
                     {"input_size", a.input_size}};
}

void from_json(const nlohmann::json& j, ArchDescriptor& a) {
  a = ArchDescriptor{};
  a.input_channels = j.value("input_channels", a.input_channels);
  a.conv_channels = j.value("conv_channels", a.conv_channels);
  a.head_hidden = j.value("head_hidden", a.head_hidden);
  a.projection_dim = j.value("projection_dim", a.projection_dim);
  a.input_size = j.value("input_size", a.input_size);
}

EncoderParams init_encoder(const ArchDescriptor& arch, std::uint64_t seed) {
  arch.validate();
  EncoderParams p;
  p.arch = arch;
  p.seed = seed;
  Rng rng(seed);
  const auto shapes = arch.parameter_shapes();
  for (const auto& shape : shapes) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    std::vector<float> t(count, 0.0f);
    if (shape.size() > 1) {
      std::size_t fan_in = count / static_cast<std::size_t>(shape[0]);
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (float& w : t) w = static_cast<float>(rng.uniform(-bound, bound));
    }
    p.tensors.push_back(std::move(t));
  }
  return p;
}

template <typename T>
EmbeddingBatchT<T> forward(const EncoderParamsT<T>& params, std::span<const T> input, int batch,
                           ForwardCache<T>* cache) {
  const ArchDescriptor& arch = params.arch;
  const int channels = arch.input_channels;
  const int size = arch.input_size;
  const std::size_t sample = static_cast<std::size_t>(channels) * size * size;
  if (batch < 1) throw ConfigError("forward needs a non-empty batch");
  if (input.size() != sample * batch)
    throw DataError("channel mismatch: input does not hold " + std::to_string(batch) + " samples of " +
                    std::to_string(channels) + " x " + std::to_string(size) + " x " + std::to_string(size));
  const auto sizes = arch.spatial_sizes();
  const int blocks = static_cast<int>(arch.conv_channels.size());

  // Reorder [B][C][S][S] -> [C][B][S][S].
  const std::size_t hw = static_cast<std::size_t>(size) * size;
  std::vector<T> act(input.size());
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < channels; ++c)
      std::copy_n(input.data() + (static_cast<std::size_t>(b) * channels + c) * hw, hw,
                  act.data() + (static_cast<std::size_t>(c) * batch + b) * hw);

  if (cache) {
    cache->batch = batch;
    cache->cols.assign(blocks, {});
    cache->activations.assign(blocks, {});
    cache->valid = false;
  }

  int in_ch = channels;
  for (int l = 0; l < blocks; ++l) {
    const int out_ch = arch.conv_channels[l];
    const int in_size = sizes[l];
    const int out_size = sizes[l + 1];
    const std::size_t k = static_cast<std::size_t>(in_ch) * 9;
    const std::size_t n = static_cast<std::size_t>(batch) * out_size * out_size;
    std::vector<T> col(k * n);
    im2col(act.data(), in_ch, batch, in_size, out_size, col.data());
    std::vector<T> out(static_cast<std::size_t>(out_ch) * n);
    ConstMatMap<T> w(params.tensors[conv_weight_slot(l)].data(), out_ch, static_cast<Eigen::Index>(k));
    ConstVecMap<T> bias(params.tensors[conv_bias_slot(l)].data(), out_ch);
    MatMap<T> o(out.data(), out_ch, static_cast<Eigen::Index>(n));
    o.noalias() = w * ConstMatMap<T>(col.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    o.colwise() += bias;
    o = o.cwiseMax(T(0));
    if (cache) {
      cache->cols[l] = std::move(col);
      cache->activations[l] = out;
    }
    act = std::move(out);
    in_ch = out_ch;
  }

  const int e = arch.embedding_dim();
  const std::size_t last_hw = static_cast<std::size_t>(sizes.back()) * sizes.back();
  EmbeddingBatchT<T> result;
  result.rows = batch;
  result.h_dim = e;
  result.z_dim = arch.projection_dim;
  result.h.assign(static_cast<std::size_t>(batch) * e, T(0));
  for (int c = 0; c < e; ++c)
    for (int b = 0; b < batch; ++b) {
      const T* src = act.data() + (static_cast<std::size_t>(c) * batch + b) * last_hw;
      T acc = 0;
      for (std::size_t p = 0; p < last_hw; ++p) acc += src[p];
      result.h[static_cast<std::size_t>(b) * e + c] = acc / static_cast<T>(last_hw);
    }

  const int hid = arch.head_hidden;
  const int pdim = arch.projection_dim;
  ConstMatMap<T> h(result.h.data(), batch, e);
  ConstMatMap<T> w1(params.tensors[head_slot(arch, 0)].data(), hid, e);
  ConstVecMap<T> b1(params.tensors[head_slot(arch, 1)].data(), hid);
  ConstMatMap<T> w2(params.tensors[head_slot(arch, 2)].data(), pdim, hid);
  ConstVecMap<T> b2(params.tensors[head_slot(arch, 3)].data(), pdim);

  std::vector<T> hidden_pre(static_cast<std::size_t>(batch) * hid);
  MatMap<T> u(hidden_pre.data(), batch, hid);
  u.noalias() = h * w1.transpose();
  u.rowwise() += b1.transpose();
  std::vector<T> hidden(hidden_pre.size());
  MatMap<T> a(hidden.data(), batch, hid);
  a = u.cwiseMax(T(0));
  result.z.resize(static_cast<std::size_t>(batch) * pdim);
  MatMap<T> z(result.z.data(), batch, pdim);
  z.noalias() = a * w2.transpose();
  z.rowwise() += b2.transpose();

  if (cache) {
    cache->h = result.h;
    cache->hidden_pre = std::move(hidden_pre);
    cache->hidden = std::move(hidden);
    cache->valid = true;
  }
  return result;
}

template <typename T>
std::vector<std::vector<T>> backward(const EncoderParamsT<T>& params, const ForwardCache<T>& cache,
                                     std::span<const T> grad_z, std::span<const T> grad_h) {
  if (!cache.valid) throw ConfigError("backward called without a forward cache");
  const ArchDescriptor& arch = params.arch;
  const int batch = cache.batch;
  const int e = arch.embedding_dim();
  const int hid = arch.head_hidden;
  const int pdim = arch.projection_dim;
  if (grad_z.size() != static_cast<std::size_t>(batch) * pdim) throw DataError("grad_z shape mismatch");
  if (!grad_h.empty() && grad_h.size() != static_cast<std::size_t>(batch) * e)
    throw DataError("grad_h shape mismatch");

  std::vector<std::vector<T>> grads(params.tensors.size());
  for (std::size_t i = 0; i < grads.size(); ++i) grads[i].assign(params.tensors[i].size(), T(0));

  ConstMatMap<T> dz(grad_z.data(), batch, pdim);
  ConstMatMap<T> a(cache.hidden.data(), batch, hid);
  ConstMatMap<T> u(cache.hidden_pre.data(), batch, hid);
  ConstMatMap<T> h(cache.h.data(), batch, e);
  ConstMatMap<T> w1(params.tensors[head_slot(arch, 0)].data(), hid, e);
  ConstMatMap<T> w2(params.tensors[head_slot(arch, 2)].data(), pdim, hid);

  MatMap<T>(grads[head_slot(arch, 2)].data(), pdim, hid).noalias() = dz.transpose() * a;
  column_sums(grad_z.data(), batch, pdim, grads[head_slot(arch, 3)].data());

  RowMat<T> du = dz * w2;
  du = du.cwiseProduct((u.array() > T(0)).template cast<T>().matrix());
  MatMap<T>(grads[head_slot(arch, 0)].data(), hid, e).noalias() = du.transpose() * h;
  column_sums(du.data(), batch, hid, grads[head_slot(arch, 1)].data());

  RowMat<T> dh = du * w1;
  if (!grad_h.empty()) dh += ConstMatMap<T>(grad_h.data(), batch, e);

  const auto sizes = arch.spatial_sizes();
  const int blocks = static_cast<int>(arch.conv_channels.size());
  const std::size_t last_hw = static_cast<std::size_t>(sizes.back()) * sizes.back();
  std::vector<T> d_act(static_cast<std::size_t>(e) * batch * last_hw);
  for (int c = 0; c < e; ++c)
    for (int b = 0; b < batch; ++b) {
      const T g = dh(b, c) / static_cast<T>(last_hw);
      std::fill_n(d_act.data() + (static_cast<std::size_t>(c) * batch + b) * last_hw, last_hw, g);
    }

  for (int l = blocks - 1; l >= 0; --l) {
    const int out_ch = arch.conv_channels[l];
    const int in_ch = l == 0 ? arch.input_channels : arch.conv_channels[l - 1];
    const int out_size = sizes[l + 1];
    const std::size_t k = static_cast<std::size_t>(in_ch) * 9;
    const std::size_t n = static_cast<std::size_t>(batch) * out_size * out_size;
    const T* out = cache.activations[l].data();
    for (std::size_t i = 0; i < d_act.size(); ++i)
      if (!(out[i] > T(0))) d_act[i] = T(0);
    ConstMatMap<T> dpre(d_act.data(), out_ch, static_cast<Eigen::Index>(n));
    ConstMatMap<T> col(cache.cols[l].data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    MatMap<T>(grads[conv_weight_slot(l)].data(), out_ch, static_cast<Eigen::Index>(k)).noalias() =
        dpre * col.transpose();
    T* bias_grad = grads[conv_bias_slot(l)].data();
    for (int c = 0; c < out_ch; ++c) {
      const T* row = d_act.data() + static_cast<std::size_t>(c) * n;
      T acc = 0;
      for (std::size_t i = 0; i < n; ++i) acc += row[i];
      bias_grad[c] = acc;
    }
    if (l == 0) break;
    ConstMatMap<T> w(params.tensors[conv_weight_slot(l)].data(), out_ch, static_cast<Eigen::Index>(k));
    std::vector<T> dcol(k * n);
    MatMap<T>(dcol.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)).noalias() =
        w.transpose() * dpre;
    std::vector<T> d_prev(static_cast<std::size_t>(in_ch) * batch * sizes[l] * sizes[l]);
    col2im(dcol.data(), in_ch, batch, sizes[l], out_size, d_prev.data());
    d_act = std::move(d_prev);
  }
  return grads;
}

template EmbeddingBatchT<float> forward(const EncoderParamsT<float>&, std::span<const float>, int,
                                        ForwardCache<float>*);
template EmbeddingBatchT<double> forward(const EncoderParamsT<double>&, std::span<const double>, int,
                                         ForwardCache<double>*);
template std::vector<std::vector<float>> backward(const EncoderParamsT<float>&, const ForwardCache<float>&,
                                                  std::span<const float>, std::span<const float>);
template std::vector<std::vector<double>> backward(const EncoderParamsT<double>&, const ForwardCache<double>&,
                                                   std::span<const double>, std::span<const double>);

std::vector<float> pack_tiles(std::span<const Tile* const> tiles) {
  std::vector<float> out;
  if (tiles.empty()) return out;
  const std::size_t per = tiles.front()->pixels.size();
  out.resize(per * tiles.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (tiles[i]->pixels.size() != per) throw DataError("tiles in a batch differ in channel count");
    std::copy(tiles[i]->pixels.begin(), tiles[i]->pixels.end(), out.begin() + i * per);
  }
  return out;
}

void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = kCheckpointFormat;
  header["version"] = kCheckpointVersion;
  header["arch"] = params.arch;
  header["seed"] = params.seed;
  header["epochs"] = params.epochs_completed;
  header["parameter_count"] = params.parameter_count();
  header["shapes"] = params.arch.parameter_shapes();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::string text = header.dump();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.put('\0');
  for (const auto& t : params.tensors) detail::write_f32s(out, t);
  if (!out) throw DataError("failed writing " + path.string());
}

EncoderParams load_checkpoint(const std::filesystem::path& path, int expected_channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::string text;
  if (!std::getline(in, text, '\0') || in.eof()) throw FormatError("checkpoint header is not terminated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  }
  EncoderParams p;
  std::size_t count = 0;
  std::vector<std::vector<int>> shapes;
  try {
    if (header.at("format") != kCheckpointFormat) throw FormatError("not a FireCLR checkpoint");
    if (header.at("version") != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
    p.arch = header.at("arch").get<ArchDescriptor>();
    p.seed = header.at("seed").get<std::uint64_t>();
    p.epochs_completed = header.at("epochs").get<int>();
    count = header.at("parameter_count").get<std::size_t>();
    shapes = header.at("shapes").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint header: ") + e.what());
  }
  try {
    p.arch.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid architecture in checkpoint: ") + e.what());
  }
  if (expected_channels >= 0 && p.arch.input_channels != expected_channels)
    throw DataError("channel mismatch: checkpoint expects " + std::to_string(p.arch.input_channels) +
                    " channels, data has " + std::to_string(expected_channels));
  if (shapes != p.arch.parameter_shapes()) throw FormatError("checkpoint shapes do not match its architecture");

  std::size_t expected = 0;
  for (const auto& s : shapes) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    expected += n;
  }
  if (expected != count) throw FormatError("checkpoint parameter count disagrees with its shapes");

  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto payload = static_cast<std::uint64_t>(in.tellg() - here);
  in.seekg(here);
  if (payload != 4 * static_cast<std::uint64_t>(count))
    throw FormatError("checkpoint payload is " + std::to_string(payload) + " bytes, expected " +
                      std::to_string(4 * count) + " (truncated or corrupt)");
  for (const auto& s : shapes) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    std::vector<float> t(n);
    detail::read_f32s(in, t);
    p.tensors.push_back(std::move(t));
  }
  return p;
}

}  // namespace fireclr
