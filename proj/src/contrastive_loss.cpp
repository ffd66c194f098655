#include "fireclr/contrastive_loss.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "fireclr/error.hpp"

namespace fireclr {

template <typename T>
LossResult<T> nt_xent_loss(std::span<const T> z, int rows, int dim, double temperature) {
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  if (rows < 2 || rows % 2 != 0) throw ConfigError("NT-Xent needs an even number (>= 2) of rows");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (z.size() != static_cast<std::size_t>(rows) * dim) throw DataError("z shape mismatch");

  Mat zz(rows, dim);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < dim; ++j) zz(i, j) = static_cast<double>(z[static_cast<std::size_t>(i) * dim + j]);
  Eigen::VectorXd norms = zz.rowwise().norm();
  for (int i = 0; i < rows; ++i)
    if (!(norms(i) > 0.0)) throw DataError("zero-norm embedding row " + std::to_string(i));
  const Mat n = norms.cwiseInverse().asDiagonal() * zz;
  const Mat logits = (n * n.transpose()) / temperature;

  // G(i, k) = dL/dlogit(i, k); diagonal excluded.
  Mat g = Mat::Zero(rows, rows);
  LossResult<T> result;
  result.per_anchor.resize(rows);
  double total = 0.0;
  for (int i = 0; i < rows; ++i) {
    const int pos = i ^ 1;
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < rows; ++k)
      if (k != i) mx = std::max(mx, logits(i, k));
    double denom = 0.0;
    for (int k = 0; k < rows; ++k)
      if (k != i) denom += std::exp(logits(i, k) - mx);
    const double lse = mx + std::log(denom);
    const double li = lse - logits(i, pos);
    result.per_anchor[i] = li;
    total += li;
    for (int k = 0; k < rows; ++k) {
      if (k == i) continue;
      g(i, k) = std::exp(logits(i, k) - lse) / rows;
    }
    g(i, pos) -= 1.0 / rows;
  }
  result.loss = total / rows;

  // logits = n n^T / t, so dL/dn = (G + G^T) n / t; then back through the row normalization.
  const Mat dn = ((g + g.transpose()) * n) / temperature;
  result.grad.resize(z.size());
  for (int i = 0; i < rows; ++i) {
    const double proj = n.row(i).dot(dn.row(i));
    for (int j = 0; j < dim; ++j)
      result.grad[static_cast<std::size_t>(i) * dim + j] =
          static_cast<T>((dn(i, j) - n(i, j) * proj) / norms(i));
  }
  return result;
}

template LossResult<float> nt_xent_loss(std::span<const float>, int, int, double);
template LossResult<double> nt_xent_loss(std::span<const double>, int, int, double);

}  // namespace fireclr
