#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fireclr/augmentation.hpp"
#include "fireclr/encoder.hpp"

namespace fireclr {

struct TrainConfig {
  double temperature = 0.5;
  int batch_size = 256;  // tiles per batch; each contributes two views
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_epochs = 1024;
  int patience = 50;
  double min_delta = 1e-4;
  std::uint64_t seed = 0;
  int threads = 1;
  // Architecture override; input_channels always follows the data.
  std::optional<ArchDescriptor> arch;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

/// Adam with bias correction, state per parameter tensor.
template <typename T>
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double beta1, double beta2, double epsilon)
      : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  void step(std::vector<std::vector<T>>& params, const std::vector<std::vector<T>>& grads);
  std::int64_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  std::int64_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

struct TrainResult {
  EncoderParams params;              // parameters after the best epoch
  std::vector<double> loss_history;  // epoch-mean loss, one per completed epoch
  int best_epoch = 0;                // 1-based
  bool early_stopped = false;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Two augmented views per tile, NT-Xent, Adam. Stops after `patience`
/// consecutive epochs without an improvement larger than min_delta over the
/// best loss so far, or at max_epochs. Incomplete trailing batches are dropped.
TrainResult train(std::span<const Tile> tiles, const TrainConfig& cfg, const AugmentationConfig& aug,
                  const EpochCallback& on_epoch = {});

/// Loss-history CSV with header "epoch,mean_loss".
void save_loss_history(std::span<const double> history, const std::filesystem::path& path);

}  // namespace fireclr
