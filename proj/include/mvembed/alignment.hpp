#pragma once

#include "mvembed/dataset.hpp"
#include "mvembed/patches.hpp"

#include <Eigen/Sparse>

namespace mvembed {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Patch bookkeeping accumulated while assembling alignment matrices. Clamped
// means a patch wanted more neighbors than its candidate pool held; empty
// patches contribute nothing and are only counted.
struct AlignmentDiagnostics {
  long long patches_total = 0;
  long long patches_clamped = 0;
  long long patches_empty = 0;

  void absorb(const AlignmentDiagnostics& other) {
    patches_total += other.patches_total;
    patches_clamped += other.patches_clamped;
    patches_empty += other.patches_empty;
  }
};

// Paired-sample agreement matrix over the stacked arrangement (n views of m
// objects): the sum over all cyclic view rotations P of (I - P)(I - P)^T.
// The embedding trace Y J Y^T equals the summed squared distances between
// every ordered pair of views of the same object. Positive semidefinite, rows
// sum to zero.
SparseMatrix build_J(int view_count, Index object_count);

// Within-view discriminant alignment: every sample anchors one patch in its
// own view (p1 same-class pulls, p2 other-class pushes weighted by beta);
// patch weight matrices scatter-add into the stacked arrangement.
SparseMatrix build_U(const MultiViewDataset& data, Index p1, Index p2, double beta,
                     AlignmentDiagnostics* diagnostics = nullptr);

// Cross-view discriminant alignment: every sample anchors one patch per other
// view, built around its paired sample there.
SparseMatrix build_V(const MultiViewDataset& data, Index p1, Index p2, double beta,
                     bool include_paired = false, AlignmentDiagnostics* diagnostics = nullptr);

// The three raw objective terms evaluated by direct summation over sample
// pairs and patches, bypassing the alignment matrices entirely. stacked_W is
// the vertical concatenation of per-view projections. This is the reference
// the matrix route must reproduce: paired = tr(Y J Y^T), intra = tr(Y U Y^T),
// inter = tr(Y V Y^T).
struct NaiveObjectives {
  double paired = 0.0;
  double intra = 0.0;
  double inter = 0.0;
};
NaiveObjectives naive_objectives(const MultiViewDataset& data, const Matrix& stacked_W, Index p1,
                                 Index p2, double beta, bool include_paired = false);

}  // namespace mvembed
