#include "fireclr/run_config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fireclr/error.hpp"

namespace fireclr {

namespace {

void check_exists(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

void resolve(std::filesystem::path& p, const std::filesystem::path& base) {
  if (!p.empty() && p.is_relative()) p = base / p;
}

}  // namespace

void RunConfig::validate() const {
  if (synth) synth->validate();
  if (stride < 1 || stride > kMaxStride) throw ConfigError("stride must lie in [1, " + std::to_string(kMaxStride) + "]");
  if (train_stride < 1 || train_stride > kMaxStride)
    throw ConfigError("train_stride must lie in [1, " + std::to_string(kMaxStride) + "]");
  if (pixel_size && !(*pixel_size > 0.0)) throw ConfigError("pixel_size must be > 0");
  if (roi) roi->validate();
  if (k < 1) throw ConfigError("k must be >= 1");
  augmentation.validate();
  train.validate();
  if (pre) check_exists(pre->path, "pre scene");
  if (post) check_exists(post->path, "post scene");
  for (const auto& s : training_scenes) check_exists(s.path, "training scene");
}

void from_json(const nlohmann::json& j, SceneRef& ref) {
  ref = SceneRef{};
  if (j.is_string()) {
    ref.path = j.get<std::string>();
    return;
  }
  ref.path = j.at("path").get<std::string>();
  if (j.contains("bands")) {
    BandMap m;
    for (const auto& [role, index] : j.at("bands").items()) m[parse_band_role(role)] = index.get<int>();
    ref.bands = m;
  }
  if (j.contains("timestamp")) ref.timestamp = Date::parse(j.at("timestamp").get<std::string>());
  ref.integer_scale = j.value("integer_scale", ref.integer_scale);
  if (!(ref.integer_scale > 0.0)) throw ConfigError("integer_scale must be > 0");
  if (ref.bands && !ref.timestamp) throw ConfigError("scene " + ref.path.string() + " has bands but no timestamp");
}

void from_json(const nlohmann::json& j, RunConfig& cfg) {
  cfg = RunConfig{};
  if (j.contains("synth")) cfg.synth = j.at("synth").get<SynthSpec>();
  if (j.contains("pre")) cfg.pre = j.at("pre").get<SceneRef>();
  if (j.contains("post")) cfg.post = j.at("post").get<SceneRef>();
  if (j.contains("training_scenes"))
    for (const auto& s : j.at("training_scenes")) cfg.training_scenes.push_back(s.get<SceneRef>());
  if (j.contains("roi")) {
    const auto& r = j.at("roi");
    cfg.roi = RegionOfInterest{r.at("min_x").get<double>(), r.at("min_y").get<double>(), r.at("max_x").get<double>(),
                               r.at("max_y").get<double>()};
  }
  if (j.contains("pixel_size")) cfg.pixel_size = j.at("pixel_size").get<double>();
  cfg.stride = j.value("stride", cfg.stride);
  cfg.train_stride = j.value("train_stride", cfg.train_stride);
  if (j.contains("norm_stats")) cfg.norm_stats = j.at("norm_stats").get<std::string>();
  if (j.contains("augmentation")) cfg.augmentation = j.at("augmentation").get<AugmentationConfig>();
  if (j.contains("train")) cfg.train = j.at("train").get<TrainConfig>();
  if (j.contains("checkpoint")) cfg.checkpoint = j.at("checkpoint").get<std::string>();
  if (j.contains("metric")) cfg.metric = parse_metric(j.at("metric").get<std::string>());
  if (j.contains("representation")) cfg.representation = parse_representation(j.at("representation").get<std::string>());
  if (j.contains("colormap")) cfg.colormap = parse_colormap(j.at("colormap").get<std::string>());
  cfg.k = j.value("k", cfg.k);
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  RunConfig cfg;
  try {
    cfg = nlohmann::json::parse(in).get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid config " + path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  if (cfg.pre) resolve(cfg.pre->path, base);
  if (cfg.post) resolve(cfg.post->path, base);
  for (auto& s : cfg.training_scenes) resolve(s.path, base);
  if (cfg.norm_stats) resolve(*cfg.norm_stats, base);
  if (cfg.checkpoint) resolve(*cfg.checkpoint, base);
  resolve(cfg.out_dir, base);
  cfg.validate();
  return cfg;
}

BandMap parse_band_map(std::string_view text) {
  BandMap m;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("band map entry '" + item + "' must look like role=index");
    const BandRole role = parse_band_role(item.substr(0, eq));
    int index = 0;
    try {
      std::size_t used = 0;
      index = std::stoi(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("band index in '" + item + "' is not an integer");
    }
    if (!m.emplace(role, index).second) throw ConfigError("band role listed twice in '" + std::string(text) + "'");
  }
  if (m.empty()) throw ConfigError("empty band map");
  return m;
}

Scene load_scene_ref(const SceneRef& ref, const std::optional<RegionOfInterest>& roi, std::optional<double> pixel_size) {
  Scene s;
  if (ref.bands) {
    LoadOptions opts;
    opts.integer_scale = ref.integer_scale;
    s = load_scene(ref.path, *ref.bands, ref.timestamp.value_or(Date{}), opts);
  } else {
    s = load_scene_file(ref.path);
  }
  if (roi) s = clip(s, *roi);
  if (pixel_size) s = resample_to(s, *pixel_size);
  return s;
}

}  // namespace fireclr
