#include "mvembed/embedding.hpp"

#include <cmath>
#include <sstream>

namespace mvembed {

KernelKind parse_kernel(const std::string& name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "rbf") return KernelKind::rbf;
  throw UsageError("unknown kernel '" + name + "'; expected linear or rbf");
}

std::string kernel_name(KernelKind k) {
  return k == KernelKind::linear ? "linear" : "rbf";
}

Matrix gram(const KernelSpec& kernel, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw Error("kernel", "kernel arguments disagree on dimension");
  if (kernel.kind == KernelKind::linear) return a.transpose() * b;

  if (!(kernel.sigma > 0.0)) throw Error("kernel", "rbf kernel needs positive sigma");
  Matrix d2 = -2.0 * (a.transpose() * b);
  d2.colwise() += a.colwise().squaredNorm().transpose();
  d2.rowwise() += b.colwise().squaredNorm();
  d2 = d2.cwiseMax(0.0);  // rounding can push tiny distances negative
  return (-d2 / (2.0 * kernel.sigma * kernel.sigma)).array().exp().matrix();
}

namespace {

void validate_params(const HyperParams& p) {
  if (p.lambda1 < 0.0 || p.lambda2 < 0.0)
    throw Error("fit", "term weights lambda1/lambda2 must be nonnegative");
  if (p.p1 < 0 || p.p2 < 0) throw Error("fit", "neighbor budgets p1/p2 must be nonnegative");
  if (p.p1 + p.p2 < 1) throw Error("fit", "at least one neighbor per patch is required");
  if (p.beta < 0.0) throw Error("fit", "beta must be nonnegative");
  if (p.d < 1) throw Error("fit", "embedding dimension d must be positive");
}

// J + lambda1 U + lambda2 V restricted to the enabled terms.
SparseMatrix combined_alignment(const MultiViewDataset& data, const HyperParams& params,
                                const ComponentMask& mask, AlignmentDiagnostics* diagnostics) {
  const Index order = static_cast<Index>(data.view_count()) * data.object_count();
  SparseMatrix total(order, order);
  bool any = false;
  if (mask.paired) {
    total = build_J(data.view_count(), data.object_count());
    any = true;
  }
  if (mask.intra && params.lambda1 > 0.0) {
    total = total + SparseMatrix(params.lambda1 * build_U(data, params.p1, params.p2, params.beta,
                                                          diagnostics));
    any = true;
  }
  if (mask.inter && params.lambda2 > 0.0) {
    total = total + SparseMatrix(params.lambda2 * build_V(data, params.p1, params.p2, params.beta,
                                                          false, diagnostics));
    any = true;
  }
  if (!any) throw Error("fit", "all objective terms are disabled or have zero weight");
  return total;
}

Matrix block_diagonal_data(const MultiViewDataset& data) {
  Index total_dim = 0;
  for (const Matrix& view : data.views) total_dim += view.rows();
  const Index m = data.object_count();
  Matrix x = Matrix::Zero(total_dim, static_cast<Index>(data.view_count()) * m);
  Index row = 0;
  for (int v = 0; v < data.view_count(); ++v) {
    const Matrix& view = data.views[static_cast<std::size_t>(v)];
    x.block(row, static_cast<Index>(v) * m, view.rows(), m) = view;
    row += view.rows();
  }
  return x;
}

Matrix block_diagonal_gram(const MultiViewDataset& data, const KernelSpec& kernel) {
  const Index m = data.object_count();
  const Index order = static_cast<Index>(data.view_count()) * m;
  Matrix k = Matrix::Zero(order, order);
  for (int v = 0; v < data.view_count(); ++v) {
    const Matrix& view = data.views[static_cast<std::size_t>(v)];
    k.block(static_cast<Index>(v) * m, static_cast<Index>(v) * m, m, m) =
        gram(kernel, view, view);
  }
  return k;
}

std::vector<Index> view_heights(const MultiViewDataset& data) {
  std::vector<Index> heights;
  heights.reserve(data.views.size());
  for (const Matrix& view : data.views) heights.push_back(view.rows());
  return heights;
}

}  // namespace

LinearModel fit_mvhe(const MultiViewDataset& data, const HyperParams& params,
                     const ComponentMask& mask, AlignmentDiagnostics* diagnostics) {
  data.validate();
  validate_params(params);
  Index min_dim = data.views.front().rows();
  for (const Matrix& view : data.views) min_dim = std::min(min_dim, view.rows());
  if (params.d > min_dim) {
    std::ostringstream os;
    os << "embedding dimension " << params.d << " exceeds the smallest view dimension " << min_dim;
    throw Error("fit", os.str());
  }

  const SparseMatrix alignment = combined_alignment(data, params, mask, diagnostics);
  const Matrix x = block_diagonal_data(data);
  Matrix m = x * (alignment * x.transpose());
  m = 0.5 * (m + m.transpose().eval());

  Eigen::SelfAdjointEigenSolver<Matrix> eigen(m);
  if (eigen.info() != Eigen::Success) throw Error("fit", "eigendecomposition failed");

  const double scale = std::sqrt(double(data.view_count()));
  Matrix stacked = eigen.eigenvectors().leftCols(params.d) * scale;
  fix_column_signs(stacked);

  LinearModel model;
  model.method = "mvhe";
  model.params = params;
  model.eigenvalues = eigen.eigenvalues().head(params.d);
  model.per_view_W = split_rows(stacked, view_heights(data));
  return model;
}

KernelModel fit_kmvhe(const MultiViewDataset& data, const HyperParams& params,
                      const KernelSpec& kernel, const ComponentMask& mask,
                      AlignmentDiagnostics* diagnostics) {
  data.validate();
  validate_params(params);
  const Index m = data.object_count();
  const Index order = static_cast<Index>(data.view_count()) * m;
  if (params.d > order)
    throw Error("fit", "embedding dimension exceeds the stacked kernel order");

  const SparseMatrix alignment = combined_alignment(data, params, mask, diagnostics);
  const Matrix k = block_diagonal_gram(data, kernel);

  Matrix lhs = k * (alignment * k);
  lhs = 0.5 * (lhs + lhs.transpose().eval());
  const double epsilon = 1e-8 * k.trace() / double(order);
  Matrix rhs = k;
  rhs.diagonal().array() += epsilon;

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eigen(lhs, rhs,
                                                         Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (eigen.info() != Eigen::Success)
    throw Error("fit", "generalized eigendecomposition failed; Gram matrix may be indefinite");

  Matrix a = eigen.eigenvectors().leftCols(params.d);

  // The solver normalizes under K + eps I; re-orthonormalize under K itself so
  // A^T K A = n I holds exactly (symmetric Loewdin correction, span preserved).
  const Matrix g = a.transpose() * (k * a);
  Eigen::SelfAdjointEigenSolver<Matrix> gs(0.5 * (g + g.transpose().eval()));
  if (gs.info() != Eigen::Success) throw Error("fit", "constraint Gram eigendecomposition failed");
  const Vector gv = gs.eigenvalues();
  if (!(gv(0) > 1e-12 * std::max(gv(params.d - 1), 0.0)) || !(gv(0) > 0.0))
    throw Error("fit", "selected directions collapse under the kernel metric; "
                       "reduce d or adjust the kernel");
  const Matrix correction =
      gs.eigenvectors() * gv.cwiseSqrt().cwiseInverse().asDiagonal() * gs.eigenvectors().transpose();
  a = a * correction * std::sqrt(double(data.view_count()));
  fix_column_signs(a);

  KernelModel model;
  model.method = "kmvhe";
  model.params = params;
  model.kernel = kernel;
  model.epsilon = epsilon;
  model.eigenvalues = eigen.eigenvalues().head(params.d);
  model.train_views = data.views;
  std::vector<Index> heights(static_cast<std::size_t>(data.view_count()), m);
  model.per_view_A = split_rows(a, heights);
  return model;
}

Matrix transform_linear(const LinearModel& model, int view, const Matrix& samples) {
  if (view < 0 || view >= static_cast<int>(model.per_view_W.size()))
    throw Error("transform", "view index out of range");
  const Matrix& w = model.per_view_W[static_cast<std::size_t>(view)];
  if (samples.rows() != w.rows()) {
    std::ostringstream os;
    os << "samples have dimension " << samples.rows() << " but view " << view + 1
       << " expects " << w.rows();
    throw Error("transform", os.str());
  }
  return w.transpose() * samples;
}

Matrix transform_kernel(const KernelModel& model, int view, const Matrix& samples) {
  if (view < 0 || view >= static_cast<int>(model.per_view_A.size()))
    throw Error("transform", "view index out of range");
  const Matrix& train = model.train_views[static_cast<std::size_t>(view)];
  if (samples.rows() != train.rows()) {
    std::ostringstream os;
    os << "samples have dimension " << samples.rows() << " but view " << view + 1
       << " was trained with " << train.rows();
    throw Error("transform", os.str());
  }
  const Matrix cross = gram(model.kernel, train, samples);
  return model.per_view_A[static_cast<std::size_t>(view)].transpose() * cross;
}

double objective_value(const MultiViewDataset& data, const Matrix& stacked_W,
                       const HyperParams& params, const ComponentMask& mask) {
  data.validate();
  Index total_dim = 0;
  for (const Matrix& view : data.views) total_dim += view.rows();
  if (stacked_W.rows() != total_dim)
    throw Error("objective", "stacked projection height does not match total view dimension");

  const SparseMatrix alignment = combined_alignment(data, params, mask, nullptr);
  const Matrix b = block_diagonal_data(data).transpose() * stacked_W;  // mn x d
  return (b.transpose() * (alignment * b)).trace();
}

double kernel_objective_value(const MultiViewDataset& data, const KernelModel& model,
                              const ComponentMask& mask) {
  data.validate();
  const SparseMatrix alignment = combined_alignment(data, model.params, mask, nullptr);
  const Matrix k = block_diagonal_gram(data, model.kernel);
  const Matrix b = k * model.stacked();  // mn x d
  return (b.transpose() * (alignment * b)).trace();
}

}  // namespace mvembed
