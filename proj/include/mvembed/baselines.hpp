#pragma once

#include "mvembed/dataset.hpp"
#include "mvembed/embedding.hpp"

namespace mvembed {

// Two-view canonical correlation analysis on centered data. Returned
// eigenvalues are the canonical correlations (nonincreasing, in [0, 1] up to
// rounding); per-view projections satisfy W_i^T X_i X_i^T W_i = I.
LinearModel fit_cca(const Matrix& x1, const Matrix& x2, Index d);

// Dual (kernelized) CCA with per-view Gram matrices; constraints hold under
// the squared Grams. Eigenvalues are kernel canonical correlations.
KernelModel fit_kcca(const Matrix& x1, const Matrix& x2, const KernelSpec& kernel, Index d);

// Multiset CCA: maximizes summed cross-view correlations under per-view
// variance constraints via the joint generalized eigenproblem (off-diagonal
// covariance blocks against block-diagonal within-view covariances), then
// restores W_i^T X_i X_i^T W_i = I per view by symmetric orthonormalization.
LinearModel fit_mcca(const std::vector<Matrix>& views, Index d);

// Partial least squares: dominant singular pairs of the cross-covariance
// X1 X2^T; per-view projections are orthonormal. Eigenvalues are the singular
// values (nonincreasing).
LinearModel fit_pls(const Matrix& x1, const Matrix& x2, Index d);

// Between/within scatter pair over the stacked arrangement, plus the ridge
// that stabilizes the within matrix. Exposed for direct inspection in tests.
struct ScatterPair {
  Matrix between;
  Matrix within;
  double regularization = 0.0;
};

// Multi-view discriminant analysis scatters: samples of every view embed into
// the stacked space (zeros outside their view block); class means pool all
// views, so the within scatter couples views.
ScatterPair mvda_scatters(const MultiViewDataset& data);

// Multi-view modular discriminant scatters: between-class separation is
// measured across all ordered class pairs of per-view mean differences
// (rank-one accumulation of summed mean gaps); the within scatter is
// per-view, hence block-diagonal.
ScatterPair mvmda_scatters(const MultiViewDataset& data);

// Discriminant baselines: top-d generalized eigenvectors of the scatter pair
// (descending eigenvalue order). Eigenvalues are the trace-ratio quotients.
LinearModel fit_mvda(const MultiViewDataset& data, Index d);
LinearModel fit_mvmda(const MultiViewDataset& data, Index d);

}  // namespace mvembed
