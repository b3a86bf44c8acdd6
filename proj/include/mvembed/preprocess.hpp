#pragma once

#include "mvembed/common.hpp"

namespace mvembed {

// Per-view linear compression fitted on training samples only. basis columns
// are orthonormal, ordered by explained variance (nonincreasing), with the
// canonical sign convention applied.
struct PcaModel {
  Vector mean;
  Matrix basis;                // input_dim x target_dim
  Vector explained_variance;   // target_dim entries, nonincreasing

  Index input_dim() const { return mean.size(); }
  Index target_dim() const { return basis.cols(); }
};

// Eigendecomposition of the biased sample covariance (divisor m). target_dim
// must not exceed the rank of the centered data; rank-deficient requests are
// errors rather than silently padded bases.
PcaModel pca_fit(const Matrix& samples, Index target_dim);

// basis^T (x - mean) per column.
Matrix pca_transform(const PcaModel& model, const Matrix& samples);

}  // namespace mvembed
