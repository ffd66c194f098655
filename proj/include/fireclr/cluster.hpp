#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fireclr/raster.hpp"
#include "fireclr/synth.hpp"

namespace fireclr {

/// Principal axes of a sample matrix, sorted by explained variance.
struct PCAModel {
  int dim = 0;
  int components_count = 0;
  std::vector<double> mean;                // dim
  std::vector<double> components;          // components_count x dim, row-major, unit rows
  std::vector<double> explained_variance;  // descending
  double total_variance = 0.0;             // trace of the sample covariance

  std::span<const double> component(int i) const {
    return {components.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
  double explained_variance_ratio(int i) const { return explained_variance[i] / total_variance; }
};

/// `samples` is rows x dim, row-major. Covariance uses the (rows - 1)
/// denominator. Each component is signed so its largest-magnitude entry is
/// positive. Throws DataError("degenerate band ...") on zero total variance.
PCAModel pca_fit(std::span<const double> samples, int rows, int dim, int p);

/// (x - mean) * components^T, rows x components_count.
std::vector<double> pca_project(const PCAModel& model, std::span<const double> samples, int rows, int dim);

struct ClusterModel {
  int k = 0;
  int dim = 0;
  std::vector<double> centroids;  // k x dim
  std::uint64_t seed = 0;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each assignment step
  int iterations = 0;
  std::vector<int> labels;  // cluster index per input point

  std::span<const double> centroid(int i) const {
    return {centroids.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
};

struct KMeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;  // stop when no centroid moves further than this
};

/// k-means++ seeding followed by Lloyd iterations. An empty cluster is
/// re-seeded at the point farthest from its current centroid.
ClusterModel kmeans_fit(std::span<const double> points, int rows, int dim, int k, std::uint64_t seed,
                        const KMeansOptions& options = {});

struct SeverityResult {
  std::vector<std::uint8_t> labels;  // SeverityClass codes
  ClusterModel model;
  std::vector<int> cluster_rank;  // rank of each cluster by descending centroid
  std::vector<std::string> warnings;
};

/// Clusters the non-NaN scores in 1-D and maps clusters by descending centroid:
/// highest -> white_ash, lowest -> unburned, the rest -> black_ash (k = 1
/// yields white_ash only). NaN scores become invalid.
SeverityResult classify_severity(std::span<const double> scores, int k = 3, std::uint64_t seed = 0);

/// Per-pixel band differences pre - post, rows*cols x channels in channel order.
struct FeatureMatrix {
  int rows = 0;
  int dim = 0;
  std::vector<double> values;
};

FeatureMatrix pca_change_features(const Scene& pre, const Scene& post);

struct PcaBaseline {
  PCAModel pca;
  std::vector<double> scores;  // first-component score per pixel
  SeverityResult severity;
};

/// Band-difference PCA (p = min(3, C)) with severity from the first-component score.
PcaBaseline pca_baseline(const Scene& pre, const Scene& post, int k = 3, std::uint64_t seed = 0);

}  // namespace fireclr
