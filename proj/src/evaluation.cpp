#include "fireclr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "fireclr/error.hpp"
#include "fireclr/geotiff.hpp"

namespace fireclr {

namespace {

int max_code(LabelEncoding e) { return e == LabelEncoding::binary ? 1 : 2; }

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

GroundTruthMask make_mask(int rows, int cols, std::vector<std::uint8_t> labels, LabelEncoding encoding) {
  if (labels.size() != static_cast<std::size_t>(rows) * cols) throw DataError("mask size does not match its dimensions");
  for (std::uint8_t v : labels)
    if (v != kInvalidLabel && v > max_code(encoding))
      throw DataError("unknown label " + std::to_string(v) + " for " +
                      (encoding == LabelEncoding::binary ? "binary" : "severity") + " encoding");
  GroundTruthMask m;
  m.rows = rows;
  m.cols = cols;
  m.labels = std::move(labels);
  m.encoding = encoding;
  return m;
}

GroundTruthMask load_mask(const std::filesystem::path& path, LabelEncoding encoding,
                          std::optional<std::pair<int, int>> expected_dims) {
  const RasterData raster = read_geotiff(path);
  if (raster.bands != 1) throw DataError("mask must be single-band: " + path.string());
  if (!is_integer(raster.sample_type)) throw DataError("mask must hold integer label codes: " + path.string());
  if (expected_dims && (expected_dims->first != raster.rows || expected_dims->second != raster.cols))
    throw DataError("grid mismatch: mask is " + std::to_string(raster.rows) + "x" + std::to_string(raster.cols) +
                    ", expected " + std::to_string(expected_dims->first) + "x" + std::to_string(expected_dims->second));
  std::vector<std::uint8_t> labels(raster.values.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double v = raster.values[i];
    if (v < 0 || v > 255) throw DataError("unknown label " + std::to_string(v));
    labels[i] = static_cast<std::uint8_t>(v);
  }
  GroundTruthMask m = make_mask(raster.rows, raster.cols, std::move(labels), encoding);
  m.geo = raster.geo;
  m.crs_id = raster.crs_id;
  return m;
}

void save_mask(const GroundTruthMask& mask, const std::filesystem::path& path) {
  RasterData r;
  r.rows = mask.rows;
  r.cols = mask.cols;
  r.bands = 1;
  r.values.assign(mask.labels.begin(), mask.labels.end());
  r.geo = mask.geo;
  r.crs_id = mask.crs_id;
  r.description = mask.encoding == LabelEncoding::binary ? "labels: 0 unburned, 1 burned, 255 invalid"
                                                         : "labels: 0 unburned, 1 black_ash, 2 white_ash, 255 invalid";
  write_geotiff(path, r, SampleType::u8);
}

GroundTruthMask to_binary(const GroundTruthMask& mask) {
  GroundTruthMask out = mask;
  out.encoding = LabelEncoding::binary;
  for (auto& v : out.labels)
    if (v != kInvalidLabel) v = v == 0 ? 0 : 1;
  return out;
}

PRCurve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> gt) {
  if (scores.size() != gt.size()) throw DataError("grid mismatch: score map and mask differ in size");
  PRCurve curve;
  std::vector<std::pair<double, std::uint8_t>> items;
  items.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i]) || gt[i] == kInvalidLabel) {
      ++curve.ignored;
      continue;
    }
    if (gt[i] > 1) throw DataError("unknown label " + std::to_string(gt[i]) + " in binary mask");
    items.emplace_back(scores[i], gt[i]);
    curve.positives += gt[i];
  }
  curve.total = items.size();
  if (curve.positives == 0) throw DataError("no positive pixels in ground truth");
  if (curve.positives == curve.total) throw DataError("no negative pixels in ground truth");

  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::uint64_t tp = 0, seen = 0;
  const double pos = static_cast<double>(curve.positives);
  for (std::size_t i = 0; i < items.size();) {
    const double threshold = items[i].first;
    for (; i < items.size() && items[i].first == threshold; ++i) {
      tp += items[i].second;
      ++seen;
    }
    curve.points.push_back({static_cast<double>(tp) / pos, static_cast<double>(tp) / static_cast<double>(seen), threshold});
  }
  return curve;
}

PRCurve pr_curve(std::span<const double> scores, const GroundTruthMask& gt) {
  if (gt.encoding != LabelEncoding::binary) return pr_curve(scores, to_binary(gt).labels);
  return pr_curve(scores, gt.labels);
}

double auprc(const PRCurve& curve) {
  double area = 0.0, prev_recall = 0.0;
  for (const auto& p : curve.points) {
    area += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return area;
}

double F1Result::macro_f1() const {
  double sum = 0.0;
  int n = 0;
  for (double v : f1)
    if (!std::isnan(v)) {
      sum += v;
      ++n;
    }
  return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

F1Result f1_per_class(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) throw DataError("grid mismatch: prediction and mask differ in size");
  F1Result r;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == kInvalidLabel || gt[i] == kInvalidLabel) {
      ++r.ignored;
      continue;
    }
    if (pred[i] > 2 || gt[i] > 2) throw DataError("unknown label in severity map");
    ++r.confusion[gt[i]][pred[i]];
  }
  for (int c = 0; c < 3; ++c) {
    std::uint64_t tp = r.confusion[c][c], fp = 0, fn = 0;
    for (int o = 0; o < 3; ++o) {
      if (o == c) continue;
      fp += r.confusion[o][c];
      fn += r.confusion[c][o];
    }
    if (tp + fp + fn == 0) {
      r.f1[c] = std::numeric_limits<double>::quiet_NaN();
      r.warnings.push_back(std::string("class ") + kSeverityNames[c] + " absent from prediction and ground truth; F1 undefined");
    } else {
      r.f1[c] = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    }
  }
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["auprc"] = number_or_null(auprc);
  if (f1) {
    nlohmann::ordered_json scores;
    for (int c = 2; c >= 0; --c) scores[kSeverityNames[c]] = number_or_null(f1->f1[c]);
    j["f1"] = scores;
    j["macro_f1"] = number_or_null(f1->macro_f1());
    j["confusion"] = f1->confusion;
  } else {
    j["f1"] = nullptr;
    j["confusion"] = nullptr;
  }
  j["ignored_pixels"] = ignored_pixels;
  return j.dump(2) + "\n";
}

void save_eval_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << report.to_json();
}

}  // namespace fireclr
