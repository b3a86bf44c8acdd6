#pragma once

#include "mvembed/alignment.hpp"
#include "mvembed/dataset.hpp"

namespace mvembed {

enum class KernelKind { linear, rbf };

KernelKind parse_kernel(const std::string& name);
std::string kernel_name(KernelKind k);

// rbf: exp(-||a - b||^2 / (2 sigma^2)); linear: a^T b.
struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double sigma = 1.0;
};

// Pairwise kernel evaluations: entry (i, j) = k(a_i, b_j) for columns of a, b.
Matrix gram(const KernelSpec& kernel, const Matrix& a, const Matrix& b);

// Hybrid embedding hyperparameters. lambda1 weighs the within-view
// discriminant term, lambda2 the cross-view one; p1/p2 are the per-patch
// same-class/other-class neighbor budgets with between-class weight beta;
// d is the shared embedding dimension.
struct HyperParams {
  double lambda1 = 0.01;
  double lambda2 = 0.05;
  Index p1 = 1;
  Index p2 = 15;
  double beta = 0.1;
  Index d = 10;
};

// Term toggles for ablations. Disabling a term removes it from the solved
// objective entirely; at least one enabled term must carry nonzero weight.
struct ComponentMask {
  bool paired = true;
  bool intra = true;
  bool inter = true;
};

struct LinearModel {
  std::vector<Matrix> per_view_W;  // view_dim(v) x d
  Vector eigenvalues;              // in the solver's selection order
  HyperParams params;
  std::string method;

  Matrix stacked() const { return stack_rows(per_view_W); }
};

struct KernelModel {
  std::vector<Matrix> per_view_A;     // m x d dual coefficients
  std::vector<Matrix> train_views;    // needed to evaluate cross-kernels later
  KernelSpec kernel;
  HyperParams params;
  Vector eigenvalues;
  double epsilon = 0.0;  // ridge added to the Gram constraint
  std::string method;

  Matrix stacked() const { return stack_rows(per_view_A); }
};

// Linear hybrid embedding: eigenvectors of X (J + l1 U + l2 V) X^T for the d
// smallest eigenvalues, scaled so stacked_W^T stacked_W = n I. Eigenvalues are
// reported ascending; column signs follow the library convention.
LinearModel fit_mvhe(const MultiViewDataset& data, const HyperParams& params,
                     const ComponentMask& mask = {},
                     AlignmentDiagnostics* diagnostics = nullptr);

// Kernelized variant: dual coefficients A solve K M K a = mu (K + eps I) a
// with K the block-diagonal per-view Gram and eps = 1e-8 tr(K)/(mn); selected
// columns are re-orthonormalized under the K metric so A^T K A = n I.
KernelModel fit_kmvhe(const MultiViewDataset& data, const HyperParams& params,
                      const KernelSpec& kernel, const ComponentMask& mask = {},
                      AlignmentDiagnostics* diagnostics = nullptr);

Matrix transform_linear(const LinearModel& model, int view, const Matrix& samples);
Matrix transform_kernel(const KernelModel& model, int view, const Matrix& samples);

// tr(W^T X M X^T W) with M assembled from the enabled terms; the quantity
// fit_mvhe minimizes, evaluatable for any candidate W.
double objective_value(const MultiViewDataset& data, const Matrix& stacked_W,
                       const HyperParams& params, const ComponentMask& mask = {});

// Same objective through the dual map W = X A, for comparing kernel and
// linear solutions: tr(A^T K M K A).
double kernel_objective_value(const MultiViewDataset& data, const KernelModel& model,
                              const ComponentMask& mask = {});

}  // namespace mvembed
