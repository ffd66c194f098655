#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fireclr/raster.hpp"

namespace fireclr {

enum class LabelEncoding { binary, severity };

/// Label codes: binary {0 unburned, 1 burned}; severity {0 unburned,
/// 1 black_ash, 2 white_ash}. Code 255 marks pixels to ignore in both.
inline constexpr std::uint8_t kInvalidLabel = 255;

struct GroundTruthMask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> labels;
  LabelEncoding encoding = LabelEncoding::binary;
  GeoInfo geo;
  std::string crs_id;
};

/// Validates codes against the encoding; throws DataError("unknown label ...").
GroundTruthMask make_mask(int rows, int cols, std::vector<std::uint8_t> labels, LabelEncoding encoding);

/// Reads a single-band integer raster. When expected dimensions are given and
/// differ, throws DataError("grid mismatch").
GroundTruthMask load_mask(const std::filesystem::path& path, LabelEncoding encoding,
                          std::optional<std::pair<int, int>> expected_dims = std::nullopt);
void save_mask(const GroundTruthMask& mask, const std::filesystem::path& path);

/// Burned (1) vs unburned (0) view of a severity mask.
GroundTruthMask to_binary(const GroundTruthMask& mask);

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;  // one per distinct score, descending threshold
  std::uint64_t positives = 0;
  std::uint64_t total = 0;
  std::uint64_t ignored = 0;  // NaN scores or invalid labels
};

/// Threshold sweep over non-NaN scores with tied scores entering together.
/// `gt` holds 0/1 labels (255 ignored). Throws DataError on size mismatch or
/// when positives or negatives are absent.
PRCurve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> gt);
PRCurve pr_curve(std::span<const double> scores, const GroundTruthMask& gt);

/// Step-wise average precision: sum over points of (R_k - R_{k-1}) * P_k.
double auprc(const PRCurve& curve);

/// Class order used by F1 results and the confusion matrix.
inline constexpr std::array<const char*, 3> kSeverityNames = {"unburned", "black_ash", "white_ash"};

struct F1Result {
  std::array<double, 3> f1{};  // NaN where the class is absent from pred and gt
  std::array<std::array<std::uint64_t, 3>, 3> confusion{};  // [gt][pred]
  std::uint64_t ignored = 0;
  std::vector<std::string> warnings;

  /// Mean over classes with a defined F1.
  double macro_f1() const;
};

/// One-vs-rest F1 = 2TP / (2TP + FP + FN) per severity class. Pixels invalid
/// in either map are skipped.
F1Result f1_per_class(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);

struct EvalReport {
  double auprc = std::numeric_limits<double>::quiet_NaN();
  std::optional<F1Result> f1;
  std::uint64_t ignored_pixels = 0;

  /// JSON text with NaN written as null.
  std::string to_json() const;
};

void save_eval_report(const EvalReport& report, const std::filesystem::path& path);

}  // namespace fireclr
