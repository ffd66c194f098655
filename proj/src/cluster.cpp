#include "fireclr/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "fireclr/error.hpp"
#include "fireclr/rng.hpp"

namespace fireclr {

namespace {

double squared_distance(const double* a, const double* b, int dim) {
  double acc = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return acc;
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

PCAModel pca_fit(std::span<const double> samples, int rows, int dim, int p) {
  if (dim < 1) throw ConfigError("PCA dimension must be >= 1");
  if (p < 1 || p > dim)
    throw ConfigError("PCA components p=" + std::to_string(p) + " must lie in [1, " + std::to_string(dim) + "]");
  if (rows < 2) throw DataError("PCA needs at least 2 samples");
  if (samples.size() != static_cast<std::size_t>(rows) * dim) throw DataError("sample matrix size mismatch");

  Eigen::Map<const RowMatrix> x(samples.data(), rows, dim);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const RowMatrix centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows - 1);
  const double total = cov.trace();
  if (!(total > 0.0)) throw DataError("degenerate band: PCA input has zero variance");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericalError("PCA eigendecomposition failed");

  PCAModel model;
  model.dim = dim;
  model.components_count = p;
  model.mean.assign(mean.data(), mean.data() + dim);
  model.total_variance = total;
  for (int i = 0; i < p; ++i) {
    const int col = dim - 1 - i;  // eigenvalues ascend
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    model.components.insert(model.components.end(), v.data(), v.data() + dim);
    model.explained_variance.push_back(std::max(0.0, solver.eigenvalues()[col]));
  }
  return model;
}

std::vector<double> pca_project(const PCAModel& model, std::span<const double> samples, int rows, int dim) {
  if (dim != model.dim) throw DataError("dimension mismatch: PCA model has " + std::to_string(model.dim));
  if (samples.size() != static_cast<std::size_t>(rows) * dim) throw DataError("sample matrix size mismatch");
  Eigen::Map<const RowMatrix> x(samples.data(), rows, dim);
  Eigen::Map<const Eigen::RowVectorXd> mean(model.mean.data(), dim);
  Eigen::Map<const RowMatrix> comps(model.components.data(), model.components_count, dim);
  RowMatrix out = (x.rowwise() - mean) * comps.transpose();
  return {out.data(), out.data() + out.size()};
}

ClusterModel kmeans_fit(std::span<const double> points, int rows, int dim, int k, std::uint64_t seed,
                        const KMeansOptions& options) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (dim < 1) throw ConfigError("point dimension must be >= 1");
  if (rows < k)
    throw DataError("k-means needs at least k=" + std::to_string(k) + " points, got " + std::to_string(rows));
  if (points.size() != static_cast<std::size_t>(rows) * dim) throw DataError("point matrix size mismatch");
  for (double v : points)
    if (!std::isfinite(v)) throw DataError("non-finite point in k-means input");

  const auto pt = [&](int i) { return points.data() + static_cast<std::size_t>(i) * dim; };
  ClusterModel m;
  m.k = k;
  m.dim = dim;
  m.seed = seed;
  m.centroids.resize(static_cast<std::size_t>(k) * dim);
  const auto cen = [&](int c) { return m.centroids.data() + static_cast<std::size_t>(c) * dim; };

  // k-means++ seeding.
  Rng rng(seed);
  std::vector<double> nearest(rows);
  int first = static_cast<int>(rng.uniform_int(0, rows - 1));
  std::copy(pt(first), pt(first) + dim, cen(0));
  for (int i = 0; i < rows; ++i) nearest[i] = squared_distance(pt(i), cen(0), dim);
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    int pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double run = 0.0;
      pick = rows - 1;
      for (int i = 0; i < rows; ++i) {
        run += nearest[i];
        if (run > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.uniform_int(0, rows - 1));
    }
    std::copy(pt(pick), pt(pick) + dim, cen(c));
    for (int i = 0; i < rows; ++i) nearest[i] = std::min(nearest[i], squared_distance(pt(i), cen(c), dim));
  }

  m.labels.assign(rows, 0);
  std::vector<double> dist(rows);
  std::vector<double> sums(static_cast<std::size_t>(k) * dim);
  std::vector<int> counts(k);
  std::vector<int> anchor(k);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    double inertia = 0.0;
    for (int i = 0; i < rows; ++i) {
      int best = 0;
      double best_d = squared_distance(pt(i), cen(0), dim);
      for (int c = 1; c < k; ++c) {
        const double d = squared_distance(pt(i), cen(c), dim);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      m.labels[i] = best;
      dist[i] = best_d;
      inertia += best_d;
    }
    m.inertia = inertia;
    m.inertia_history.push_back(inertia);
    m.iterations = iter + 1;

    // Means are accumulated as offsets from each cluster's first member.
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    std::fill(anchor.begin(), anchor.end(), -1);
    for (int i = 0; i < rows; ++i) {
      const int c = m.labels[i];
      if (anchor[c] < 0) anchor[c] = i;
      ++counts[c];
      for (int d = 0; d < dim; ++d) sums[static_cast<std::size_t>(c) * dim + d] += pt(i)[d] - pt(anchor[c])[d];
    }
    double movement = 0.0;
    for (int c = 0; c < k; ++c) {
      std::vector<double> next(dim);
      if (counts[c] > 0) {
        for (int d = 0; d < dim; ++d)
          next[d] = pt(anchor[c])[d] + sums[static_cast<std::size_t>(c) * dim + d] / counts[c];
      } else {
        const int far = static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy(pt(far), pt(far) + dim, next.begin());
        dist[far] = 0.0;
      }
      movement = std::max(movement, std::sqrt(squared_distance(next.data(), cen(c), dim)));
      std::copy(next.begin(), next.end(), cen(c));
    }
    if (movement < options.tolerance) break;
  }

  // Final assignment against the settled centroids.
  double inertia = 0.0;
  for (int i = 0; i < rows; ++i) {
    int best = 0;
    double best_d = squared_distance(pt(i), cen(0), dim);
    for (int c = 1; c < k; ++c) {
      const double d = squared_distance(pt(i), cen(c), dim);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    m.labels[i] = best;
    inertia += best_d;
  }
  m.inertia = inertia;
  return m;
}

SeverityResult classify_severity(std::span<const double> scores, int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("k must be >= 1");
  std::vector<double> valid;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) continue;
    valid.push_back(scores[i]);
    where.push_back(i);
  }
  if (valid.size() < static_cast<std::size_t>(k))
    throw DataError("insufficient valid scores: " + std::to_string(valid.size()) + " non-NaN values for k=" +
                    std::to_string(k));

  SeverityResult out;
  out.model = kmeans_fit(valid, static_cast<int>(valid.size()), 1, k, seed);

  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return out.model.centroids[a] > out.model.centroids[b]; });
  out.cluster_rank.assign(k, 0);
  for (int r = 0; r < k; ++r) out.cluster_rank[order[r]] = r;

  const auto class_of = [&](int cluster) {
    const int rank = out.cluster_rank[cluster];
    if (rank == 0) return SeverityClass::white_ash;
    if (rank == k - 1) return SeverityClass::unburned;
    return SeverityClass::black_ash;
  };
  out.labels.assign(scores.size(), static_cast<std::uint8_t>(SeverityClass::invalid));
  for (std::size_t i = 0; i < where.size(); ++i)
    out.labels[where[i]] = static_cast<std::uint8_t>(class_of(out.model.labels[i]));

  std::vector<int> sizes(k, 0);
  for (int l : out.model.labels) ++sizes[l];
  const int occupied = static_cast<int>(std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; }));
  if (occupied < k)
    out.warnings.push_back("degenerate clustering: only " + std::to_string(occupied) + " of " + std::to_string(k) +
                           " clusters are occupied");
  return out;
}

FeatureMatrix pca_change_features(const Scene& pre, const Scene& post) {
  if (!same_grid(pre, post) || pre.channels != post.channels) throw DataError("grid mismatch");
  if (pre.band_map != post.band_map) throw DataError("band map mismatch");
  FeatureMatrix f;
  f.rows = pre.rows * pre.cols;
  f.dim = pre.channels;
  f.values.resize(static_cast<std::size_t>(f.rows) * f.dim);
  for (int b = 0; b < f.dim; ++b) {
    const auto a = pre.band(b);
    const auto c = post.band(b);
    for (int i = 0; i < f.rows; ++i) f.values[static_cast<std::size_t>(i) * f.dim + b] = a[i] - c[i];
  }
  return f;
}

PcaBaseline pca_baseline(const Scene& pre, const Scene& post, int k, std::uint64_t seed) {
  const FeatureMatrix f = pca_change_features(pre, post);
  PcaBaseline out;
  out.pca = pca_fit(f.values, f.rows, f.dim, std::min(3, f.dim));
  const auto proj = pca_project(out.pca, f.values, f.rows, f.dim);
  out.scores.resize(f.rows);
  for (int i = 0; i < f.rows; ++i) out.scores[i] = proj[static_cast<std::size_t>(i) * out.pca.components_count];
  out.severity = classify_severity(out.scores, k, seed);
  return out;
}

}  // namespace fireclr
