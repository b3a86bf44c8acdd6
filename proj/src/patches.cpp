#include "mvembed/patches.hpp"

#include <algorithm>

namespace mvembed {

std::vector<Index> nearest_neighbors(const Matrix& view, const std::vector<int>& labels,
                                     const Vector& query, int anchor_class, bool want_same_class,
                                     Index count, const std::vector<Index>& exclude) {
  if (view.cols() != static_cast<Index>(labels.size()))
    throw Error("patches", "label count does not match column count");
  if (count < 0) throw Error("patches", "neighbor count must be nonnegative");
  if (count == 0) return {};

  std::vector<std::pair<double, Index>> candidates;
  candidates.reserve(static_cast<std::size_t>(view.cols()));
  for (Index k = 0; k < view.cols(); ++k) {
    const bool same = labels[static_cast<std::size_t>(k)] == anchor_class;
    if (same != want_same_class) continue;
    if (std::find(exclude.begin(), exclude.end(), k) != exclude.end()) continue;
    candidates.emplace_back((view.col(k) - query).squaredNorm(), k);
  }
  // (distance, id) pairs order deterministically; equal distances fall back
  // to the lower column id.
  std::sort(candidates.begin(), candidates.end());
  if (static_cast<Index>(candidates.size()) > count) candidates.resize(static_cast<std::size_t>(count));

  std::vector<Index> ids;
  ids.reserve(candidates.size());
  for (const auto& [dist, k] : candidates) ids.push_back(k);
  return ids;
}

namespace {

void check_anchor(const MultiViewDataset& data, const GlobalIndex& anchor) {
  if (anchor.view < 0 || anchor.view >= data.view_count())
    throw Error("patches", "anchor view out of range");
  if (anchor.object < 0 || anchor.object >= data.object_count())
    throw Error("patches", "anchor object out of range");
}

}  // namespace

PatchIndex build_intra_patch(const MultiViewDataset& data, const GlobalIndex& anchor, Index p1,
                             Index p2) {
  check_anchor(data, anchor);
  const Matrix& view = data.views[static_cast<std::size_t>(anchor.view)];
  const Vector query = view.col(anchor.object);
  const int anchor_class = data.labels[static_cast<std::size_t>(anchor.object)];

  PatchIndex patch;
  patch.anchor = anchor;
  patch.host_view = anchor.view;
  patch.within = nearest_neighbors(view, data.labels, query, anchor_class, true, p1, {anchor.object});
  patch.between = nearest_neighbors(view, data.labels, query, anchor_class, false, p2, {anchor.object});
  return patch;
}

PatchIndex build_inter_patch(const MultiViewDataset& data, const GlobalIndex& anchor,
                             int other_view, Index p1, Index p2, bool include_paired) {
  check_anchor(data, anchor);
  if (other_view < 0 || other_view >= data.view_count())
    throw Error("patches", "other_view out of range");
  if (other_view == anchor.view)
    throw Error("patches", "cross-view patch needs a view different from the anchor's");

  const Matrix& view = data.views[static_cast<std::size_t>(other_view)];
  // Neighbors are ranked around the anchor's paired sample in the other view;
  // the anchor itself lives in a different space and cannot be compared there.
  const Vector query = view.col(anchor.object);
  const int anchor_class = data.labels[static_cast<std::size_t>(anchor.object)];
  const std::vector<Index> exclude = include_paired ? std::vector<Index>{} : std::vector<Index>{anchor.object};

  PatchIndex patch;
  patch.anchor = anchor;
  patch.host_view = other_view;
  patch.within = nearest_neighbors(view, data.labels, query, anchor_class, true, p1, exclude);
  patch.between = nearest_neighbors(view, data.labels, query, anchor_class, false, p2, exclude);
  return patch;
}

Matrix patch_laplacian(Index p1_eff, Index p2_eff, double beta) {
  const Index p = p1_eff + p2_eff;
  if (p1_eff < 0 || p2_eff < 0) throw Error("patches", "negative neighbor counts");
  if (p == 0) throw Error("patches", "empty patch has no weight matrix");
  if (beta < 0.0) throw Error("patches", "beta must be nonnegative");

  Vector theta(p);
  theta.head(p1_eff).setConstant(1.0);
  theta.tail(p2_eff).setConstant(-beta);

  Matrix lap = Matrix::Zero(p + 1, p + 1);
  lap(0, 0) = theta.sum();
  lap.block(0, 1, 1, p) = -theta.transpose();
  lap.block(1, 0, p, 1) = -theta;
  lap.block(1, 1, p, p) = theta.asDiagonal();
  return lap;
}

}  // namespace mvembed
