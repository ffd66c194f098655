#include "fireclr/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "fireclr/contrastive_loss.hpp"
#include "fireclr/error.hpp"
#include "fireclr/parallel.hpp"

namespace fireclr {

void TrainConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 0) throw ConfigError("patience must be >= 0");
  if (!(min_delta >= 0.0)) throw ConfigError("min_delta must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (arch) arch->validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"temperature", c.temperature},   {"batch_size", c.batch_size},
                     {"learning_rate", c.learning_rate}, {"adam", {{"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}}},
                     {"max_epochs", c.max_epochs},     {"patience", c.patience},
                     {"min_delta", c.min_delta},       {"seed", c.seed}};
  if (c.arch) j["arch"] = *c.arch;
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.temperature = j.value("temperature", c.temperature);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    c.beta1 = a.value("beta1", c.beta1);
    c.beta2 = a.value("beta2", c.beta2);
    c.epsilon = a.value("epsilon", c.epsilon);
  }
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.min_delta = j.value("min_delta", c.min_delta);
  c.seed = j.value("seed", c.seed);
  if (j.contains("arch")) c.arch = j.at("arch").get<ArchDescriptor>();
  c.validate();
}

template <typename T>
void AdamOptimizer<T>::step(std::vector<std::vector<T>>& params, const std::vector<std::vector<T>>& grads) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), T(0));
      v_.emplace_back(p.size(), T(0));
    }
  }
  ++t_;
  const T b1 = static_cast<T>(beta1_);
  const T b2 = static_cast<T>(beta2_);
  const T correction1 = static_cast<T>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
  const T correction2 = static_cast<T>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
  const T lr = static_cast<T>(lr_);
  const T eps = static_cast<T>(epsilon_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const auto& g = grads[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (T(1) - b1) * g[k];
      v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
      const T m_hat = m[k] / correction1;
      const T v_hat = v[k] / correction2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template class AdamOptimizer<float>;
template class AdamOptimizer<double>;

TrainResult train(std::span<const Tile> tiles, const TrainConfig& cfg, const AugmentationConfig& aug,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  aug.validate();
  if (tiles.empty() || tiles.size() < static_cast<std::size_t>(cfg.batch_size))
    throw DataError("fewer tiles (" + std::to_string(tiles.size()) + ") than one batch (" +
                    std::to_string(cfg.batch_size) + ")");
  const int channels = tiles.front().channels();
  for (const Tile& t : tiles)
    if (t.channels() != channels) throw DataError("training tiles differ in channel count");

  ArchDescriptor arch = cfg.arch.value_or(ArchDescriptor{});
  arch.input_channels = channels;
  EncoderParams params = init_encoder(arch, cfg.seed);
  AdamOptimizer<float> adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);

  const std::size_t n = tiles.size();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t batches = n / batch;
  const std::size_t per_view = static_cast<std::size_t>(channels) * kTilePixels;
  std::vector<float> views(2 * batch * per_view);
  std::vector<std::size_t> order(n);

  TrainResult result;
  result.params = params;
  double best_loss = std::numeric_limits<double>::infinity();
  double plateau_ref = std::numeric_limits<double>::infinity();
  int wait = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = Rng::keyed(cfg.seed, static_cast<std::uint64_t>(epoch), std::numeric_limits<std::uint64_t>::max(), 0);
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<std::int64_t>(i)))]);

    double epoch_loss = 0.0;
    for (std::size_t bi = 0; bi < batches; ++bi) {
      parallel_for(batch, cfg.threads, [&](std::size_t k) {
        const std::size_t idx = order[bi * batch + k];
        Rng r1 = Rng::keyed(cfg.seed, static_cast<std::uint64_t>(epoch), idx, 0);
        Rng r2 = Rng::keyed(cfg.seed, static_cast<std::uint64_t>(epoch), idx, 1);
        auto [v1, v2] = make_views(tiles[idx], r1, r2, aug);
        std::copy(v1.pixels.begin(), v1.pixels.end(), views.begin() + (2 * k) * per_view);
        std::copy(v2.pixels.begin(), v2.pixels.end(), views.begin() + (2 * k + 1) * per_view);
      });
      ForwardCache<float> cache;
      const auto emb = forward<float>(params, views, static_cast<int>(2 * batch), &cache);
      for (float v : emb.z)
        if (!std::isfinite(v))
          throw NumericalError("non-finite embedding at epoch " + std::to_string(epoch + 1) + ", batch " +
                               std::to_string(bi + 1));
      const auto loss = nt_xent_loss<float>(emb.z, emb.rows, emb.z_dim, cfg.temperature);
      if (!std::isfinite(loss.loss))
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                             std::to_string(bi + 1));
      const auto grads = backward<float>(params, cache, loss.grad);
      adam.step(params.tensors, grads);
      epoch_loss += loss.loss;
    }
    const double mean = epoch_loss / static_cast<double>(batches);
    result.loss_history.push_back(mean);
    for (const auto& t : params.tensors)
      for (float v : t)
        if (!std::isfinite(v)) throw NumericalError("non-finite parameter after epoch " + std::to_string(epoch + 1));
    if (on_epoch) on_epoch(epoch + 1, mean);

    if (mean < best_loss) {
      best_loss = mean;
      result.params = params;
      result.params.epochs_completed = epoch + 1;
      result.best_epoch = epoch + 1;
    }
    if (mean < plateau_ref - cfg.min_delta) {
      plateau_ref = mean;
      wait = 0;
    } else if (++wait > cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

void save_loss_history(std::span<const double> history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, history[i]);
    out << buf;
  }
}

}  // namespace fireclr
