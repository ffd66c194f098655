#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fireclr/augmentation.hpp"
#include "fireclr/change.hpp"
#include "fireclr/raster.hpp"
#include "fireclr/render.hpp"
#include "fireclr/synth.hpp"
#include "fireclr/trainer.hpp"

namespace fireclr {

/// An input raster. Without `bands`, the file must carry scene metadata
/// written by save_scene(); otherwise `bands` and `timestamp` are required.
struct SceneRef {
  std::filesystem::path path;
  std::optional<BandMap> bands;
  std::optional<Date> timestamp;
  double integer_scale = 10000.0;
};

/// One JSON document describing a pipeline run. Every field is optional in
/// the file; stages check for the inputs they need.
struct RunConfig {
  std::optional<SynthSpec> synth;
  std::optional<SceneRef> pre;
  std::optional<SceneRef> post;
  std::vector<SceneRef> training_scenes;
  std::optional<RegionOfInterest> roi;
  std::optional<double> pixel_size;
  int stride = 8;
  int train_stride = 8;
  std::optional<std::filesystem::path> norm_stats;
  AugmentationConfig augmentation;
  TrainConfig train;
  std::optional<std::filesystem::path> checkpoint;
  Metric metric = Metric::cosine;
  Representation representation = Representation::z;
  Colormap colormap = Colormap::grayscale;
  int k = 3;
  std::filesystem::path out_dir = ".";

  /// Checks value ranges of every sub-config and that input scene files exist.
  /// Throws ConfigError.
  void validate() const;
};

void from_json(const nlohmann::json& j, SceneRef& ref);
void from_json(const nlohmann::json& j, RunConfig& cfg);

/// Parses and validates; relative paths resolve against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

/// Parses "red=0,nir=3" style band maps.
BandMap parse_band_map(std::string_view text);

/// Loads the scene, then applies the optional ROI clip and resampling.
Scene load_scene_ref(const SceneRef& ref, const std::optional<RegionOfInterest>& roi = std::nullopt,
                     std::optional<double> pixel_size = std::nullopt);

}  // namespace fireclr
