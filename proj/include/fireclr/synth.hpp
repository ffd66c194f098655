#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fireclr/raster.hpp"

namespace fireclr {

/// Parameters of a synthetic pre/post fire scene pair. The terrain and burn
/// footprint depend on `seed` only; `snapshot` varies acquisition dates,
/// brightness nuisance and sensor noise over the same geography.
struct SynthSpec {
  std::uint64_t seed = 1;
  int snapshot = 0;
  int rows = 512;
  int cols = 512;
  double burn_fraction = 0.2;
  double white_ash_fraction = 0.2;  // of the burned area
  double smoothness = 16.0;         // Gaussian length scale of terrain noise, px
  double black_ash_nir_factor = 0.35;
  double black_ash_visible_factor = 0.7;
  double white_ash_nir_factor = 0.5;
  double white_ash_visible_offset = 0.25;
  double brightness_lo = 0.9;
  double brightness_hi = 1.1;
  double noise_sigma = 0.01;
  double pixel_size = 10.0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

void to_json(nlohmann::json& j, const SynthSpec& s);
void from_json(const nlohmann::json& j, SynthSpec& s);

enum class SeverityClass : std::uint8_t { unburned = 0, black_ash = 1, white_ash = 2, invalid = 255 };

struct SynthPair {
  Scene pre;
  Scene post;
  std::vector<std::uint8_t> burned_mask;    // 1 burned, 0 unburned
  std::vector<std::uint8_t> severity_mask;  // SeverityClass codes
  double brightness = 1.0;                  // nuisance factor applied to post
};

/// Bands are red, green, blue, nir at channels 0..3.
SynthPair generate_pair(const SynthSpec& spec);

/// local: train and eval share the geography seed and differ by snapshot.
/// global: train and eval use disjoint seeds.
enum class CorpusMode { local, global };

struct CorpusPlan {
  std::vector<SynthSpec> train;
  std::vector<SynthSpec> eval;
};

/// `train_keys` / `eval_key` are seeds in global mode and snapshot indices in
/// local mode (with base.seed as the shared geography). Throws ConfigError if
/// the eval key appears among the train keys.
CorpusPlan plan_corpus(CorpusMode mode, const SynthSpec& base, std::span<const std::uint64_t> train_keys,
                       std::uint64_t eval_key);

std::vector<SynthPair> generate_training_corpus(std::span<const SynthSpec> specs);

/// Pre and post scenes of every pair, in order.
std::vector<Scene> corpus_scenes(std::span<const SynthPair> pairs);

/// Separable Gaussian filter with reflect-101 borders, truncated at 3 sigma.
std::vector<double> gaussian_filter(std::span<const double> grid, int rows, int cols, double sigma);

}  // namespace fireclr
