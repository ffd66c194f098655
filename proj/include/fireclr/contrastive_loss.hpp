#pragma once

#include <span>
#include <vector>

namespace fireclr {

template <typename T>
struct LossResult {
  double loss = 0.0;               // mean over all 2N anchors
  std::vector<double> per_anchor;  // one value per row of z
  std::vector<T> grad;             // dL/dz, same layout as z
};

/// NT-Xent over `rows` = 2N embeddings of width `dim` (row-major). Rows 2k and
/// 2k+1 are positives for each other; every other row is a negative.
///   l_i = -log( exp(s_ip / t) / sum_{k != i} exp(s_ik / t) ),  s = cosine similarity
/// Computed in double precision. Throws DataError on a zero-norm row.
template <typename T>
LossResult<T> nt_xent_loss(std::span<const T> z, int rows, int dim, double temperature);

}  // namespace fireclr
