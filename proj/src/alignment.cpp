#include "mvembed/alignment.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace mvembed {

namespace {

// Triplet accumulation with a symmetry check before handing the matrix out.
SparseMatrix assemble(Index order, const std::vector<Eigen::Triplet<double>>& entries,
                      const char* what) {
  SparseMatrix raw(order, order);
  raw.setFromTriplets(entries.begin(), entries.end());

  const SparseMatrix transposed = SparseMatrix(raw.transpose());
  const SparseMatrix difference = raw - transposed;
  double deviation = 0.0;
  for (Index k = 0; k < difference.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(difference, k); it; ++it)
      deviation = std::max(deviation, std::abs(it.value()));
  if (deviation > 1e-10) {
    std::ostringstream os;
    os << what << " assembly lost symmetry: max deviation " << deviation;
    throw Error("alignment", os.str());
  }
  SparseMatrix sym = 0.5 * (raw + transposed);
  sym.prune(0.0);
  sym.makeCompressed();
  return sym;
}

struct EffectiveCounts {
  Index p1_eff;
  Index p2_eff;
};

EffectiveCounts record(const PatchIndex& patch, Index p1, Index p2, AlignmentDiagnostics* diag) {
  const EffectiveCounts eff{static_cast<Index>(patch.within.size()),
                            static_cast<Index>(patch.between.size())};
  if (diag) {
    ++diag->patches_total;
    if (eff.p1_eff < p1 || eff.p2_eff < p2) ++diag->patches_clamped;
    if (eff.p1_eff + eff.p2_eff == 0) ++diag->patches_empty;
  }
  return eff;
}

// Scatter-adds one patch's weight matrix into the triplet list using the flat
// stacked indices of its members; the (P+1)x(P+1) block is never placed in a
// dense mn-sized temporary.
void scatter_patch(const PatchIndex& patch, double beta, Index object_count,
                   std::vector<Eigen::Triplet<double>>& entries) {
  const Index p1_eff = static_cast<Index>(patch.within.size());
  const Index p2_eff = static_cast<Index>(patch.between.size());
  if (p1_eff + p2_eff == 0) return;

  std::vector<Index> flat;
  flat.reserve(static_cast<std::size_t>(p1_eff + p2_eff) + 1);
  flat.push_back(flat_index(patch.anchor, object_count));
  for (const Index k : patch.within)
    flat.push_back(flat_index({patch.host_view, k}, object_count));
  for (const Index k : patch.between)
    flat.push_back(flat_index({patch.host_view, k}, object_count));

  const Matrix lap = patch_laplacian(p1_eff, p2_eff, beta);
  for (Index r = 0; r < lap.rows(); ++r)
    for (Index c = 0; c < lap.cols(); ++c)
      if (lap(r, c) != 0.0)
        entries.emplace_back(flat[static_cast<std::size_t>(r)], flat[static_cast<std::size_t>(c)],
                             lap(r, c));
}

}  // namespace

SparseMatrix build_J(int view_count, Index object_count) {
  if (view_count < 1) throw Error("alignment", "need at least one view");
  if (object_count < 1) throw Error("alignment", "need at least one object");
  const Index order = static_cast<Index>(view_count) * object_count;

  // Defining form: sum over cyclic view rotations P_s, s = 1..n-1, of
  // (I - P_s)(I - P_s)^T. Entries are integer-valued, so the dense products
  // are exact; the closed form (2(n-1) diagonal, -2 between same-object
  // cross-view positions) is checked against this construction in tests.
  Matrix total = Matrix::Zero(order, order);
  const Matrix identity = Matrix::Identity(order, order);
  for (int s = 1; s < view_count; ++s) {
    Matrix rotation = Matrix::Zero(order, order);
    for (int b = 0; b < view_count; ++b) {
      const int a = (b + s) % view_count;
      for (Index k = 0; k < object_count; ++k)
        rotation(static_cast<Index>(a) * object_count + k,
                 static_cast<Index>(b) * object_count + k) = 1.0;
    }
    const Matrix difference = identity - rotation;
    total += difference * difference.transpose();
  }

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(order) * static_cast<std::size_t>(view_count));
  for (Index r = 0; r < order; ++r)
    for (Index c = 0; c < order; ++c)
      if (total(r, c) != 0.0) entries.emplace_back(r, c, total(r, c));
  return assemble(order, entries, "paired agreement");
}

SparseMatrix build_U(const MultiViewDataset& data, Index p1, Index p2, double beta,
                     AlignmentDiagnostics* diagnostics) {
  data.validate();
  if (p1 < 0 || p2 < 0) throw Error("alignment", "neighbor counts must be nonnegative");
  if (beta < 0.0) throw Error("alignment", "beta must be nonnegative");
  const Index m = data.object_count();
  const int n = data.view_count();

  std::vector<Eigen::Triplet<double>> entries;
  for (int v = 0; v < n; ++v) {
    for (Index k = 0; k < m; ++k) {
      const PatchIndex patch = build_intra_patch(data, {v, k}, p1, p2);
      record(patch, p1, p2, diagnostics);
      scatter_patch(patch, beta, m, entries);
    }
  }
  return assemble(static_cast<Index>(n) * m, entries, "within-view alignment");
}

SparseMatrix build_V(const MultiViewDataset& data, Index p1, Index p2, double beta,
                     bool include_paired, AlignmentDiagnostics* diagnostics) {
  data.validate();
  if (p1 < 0 || p2 < 0) throw Error("alignment", "neighbor counts must be nonnegative");
  if (beta < 0.0) throw Error("alignment", "beta must be nonnegative");
  const Index m = data.object_count();
  const int n = data.view_count();
  if (n < 2) throw Error("alignment", "cross-view alignment needs at least two views");

  std::vector<Eigen::Triplet<double>> entries;
  for (int v = 0; v < n; ++v) {
    for (Index k = 0; k < m; ++k) {
      for (int j = 0; j < n; ++j) {
        if (j == v) continue;
        const PatchIndex patch = build_inter_patch(data, {v, k}, j, p1, p2, include_paired);
        record(patch, p1, p2, diagnostics);
        scatter_patch(patch, beta, m, entries);
      }
    }
  }
  return assemble(static_cast<Index>(n) * m, entries, "cross-view alignment");
}

namespace {

// Embedded coordinates per view: Y_v = W_v^T X_v.
std::vector<Matrix> embed_views(const MultiViewDataset& data, const Matrix& stacked_W) {
  std::vector<Index> heights;
  heights.reserve(data.views.size());
  for (const Matrix& view : data.views) heights.push_back(view.rows());
  const std::vector<Matrix> per_view_W = split_rows(stacked_W, heights);

  std::vector<Matrix> embedded;
  embedded.reserve(data.views.size());
  for (std::size_t v = 0; v < data.views.size(); ++v)
    embedded.push_back(per_view_W[v].transpose() * data.views[v]);
  return embedded;
}

double patch_term(const std::vector<Matrix>& embedded, const PatchIndex& patch, double beta,
                  Index anchor_view) {
  const auto& anchor = embedded[static_cast<std::size_t>(anchor_view)].col(patch.anchor.object);
  const auto& host = embedded[static_cast<std::size_t>(patch.host_view)];
  double term = 0.0;
  for (const Index k : patch.within) term += (anchor - host.col(k)).squaredNorm();
  for (const Index k : patch.between) term -= beta * (anchor - host.col(k)).squaredNorm();
  return term;
}

}  // namespace

NaiveObjectives naive_objectives(const MultiViewDataset& data, const Matrix& stacked_W, Index p1,
                                 Index p2, double beta, bool include_paired) {
  data.validate();
  const std::vector<Matrix> embedded = embed_views(data, stacked_W);
  const Index m = data.object_count();
  const int n = data.view_count();

  NaiveObjectives result;
  // Paired term: every ordered view pair of the same object.
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      for (Index k = 0; k < m; ++k)
        result.paired += (embedded[static_cast<std::size_t>(a)].col(k) -
                          embedded[static_cast<std::size_t>(b)].col(k))
                             .squaredNorm();
    }

  for (int v = 0; v < n; ++v)
    for (Index k = 0; k < m; ++k)
      result.intra += patch_term(embedded, build_intra_patch(data, {v, k}, p1, p2), beta, v);

  for (int v = 0; v < n; ++v)
    for (Index k = 0; k < m; ++k)
      for (int j = 0; j < n; ++j) {
        if (j == v) continue;
        result.inter += patch_term(
            embedded, build_inter_patch(data, {v, k}, j, p1, p2, include_paired), beta, v);
      }
  return result;
}

}  // namespace mvembed
