#pragma once

#include "mvembed/common.hpp"
#include "mvembed/dataset.hpp"

namespace mvembed {

// Position of one sample in the stacked arrangement: all of view 0's columns,
// then view 1's, and so on. Zero-based throughout.
struct GlobalIndex {
  int view = 0;
  Index object = 0;
};

inline Index flat_index(const GlobalIndex& g, Index object_count) {
  return static_cast<Index>(g.view) * object_count + g.object;
}

// Local neighborhood around an anchor sample. Members always live in a single
// view (host_view); for within-view patches that is the anchor's view, for
// cross-view patches the other view. within/between store object ids in
// host_view ordered by ascending distance (ties broken by ascending id).
struct PatchIndex {
  GlobalIndex anchor;
  int host_view = 0;
  std::vector<Index> within;   // same class as the anchor
  std::vector<Index> between;  // any other class

  Index size() const { return static_cast<Index>(within.size() + between.size()); }
};

// Exhaustive scan for the `count` nearest columns of `view` whose label
// matches (want_same_class) or differs from anchor_class, skipping ids listed
// in `exclude`. Euclidean metric; ties resolved toward the lower column id.
// Fewer than `count` eligible columns is not an error: the result is clamped.
std::vector<Index> nearest_neighbors(const Matrix& view, const std::vector<int>& labels,
                                     const Vector& query, int anchor_class, bool want_same_class,
                                     Index count, const std::vector<Index>& exclude);

// Within-view patch: p1 same-class and p2 other-class neighbors of the anchor
// inside its own view, anchor itself excluded from the candidate pool.
PatchIndex build_intra_patch(const MultiViewDataset& data, const GlobalIndex& anchor, Index p1,
                             Index p2);

// Cross-view patch: neighbors are sought around the anchor's paired sample in
// other_view. By default that paired sample is excluded from the pool (it
// carries no extra geometry; the paired term already couples it); passing
// include_paired = true admits it, in which case it is always the first
// within-class member at distance zero.
PatchIndex build_inter_patch(const MultiViewDataset& data, const GlobalIndex& anchor,
                             int other_view, Index p1, Index p2, bool include_paired = false);

// Weight matrix of one patch in anchor-first member order:
//   [[sum(theta), -theta^T], [-theta, diag(theta)]]
// with theta = (1 repeated p1_eff, -beta repeated p2_eff). For an embedding y,
// y^T L y = sum_s theta_s ||y_anchor - y_s||^2: within-class members pull,
// between-class members push with weight beta.
Matrix patch_laplacian(Index p1_eff, Index p2_eff, double beta);

}  // namespace mvembed
