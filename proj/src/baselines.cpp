#include "mvembed/baselines.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <sstream>

namespace mvembed {

namespace {

// Whitened cross-covariance SVD shared by the CCA family. Solves
// max u^T C12 v under u^T C11 u = v^T C22 v = 1 for the top d pairs.
struct WhitenedCca {
  Matrix w1, w2;
  Vector correlations;
};

WhitenedCca whitened_cca(const Matrix& c11, const Matrix& c22, const Matrix& c12, Index d,
                         const char* what) {
  Eigen::LLT<Matrix> llt1(c11), llt2(c22);
  if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success)
    throw Error("fit", std::string(what) + ": within-view Gram is not positive definite");

  const Matrix half = llt1.matrixL().solve(c12);
  const Matrix whitened = llt2.matrixL().solve(half.transpose()).transpose();

  Eigen::JacobiSVD<Matrix> svd(whitened, Eigen::ComputeThinU | Eigen::ComputeThinV);
  WhitenedCca out;
  out.w1 = llt1.matrixL().transpose().solve(svd.matrixU().leftCols(d));
  out.w2 = llt2.matrixL().transpose().solve(svd.matrixV().leftCols(d));
  out.correlations = svd.singularValues().head(d);
  return out;
}

void joint_sign_fix(Matrix& w1, Matrix& w2) {
  Matrix stacked = stack_rows({w1, w2});
  fix_column_signs(stacked);
  w1 = stacked.topRows(w1.rows());
  w2 = stacked.bottomRows(w2.rows());
}

// Symmetric inverse square root of a small positive definite matrix.
Matrix inverse_sqrt(const Matrix& g, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> eigen(0.5 * (g + g.transpose().eval()));
  if (eigen.info() != Eigen::Success)
    throw Error("fit", std::string(what) + ": constraint Gram eigendecomposition failed");
  const Vector values = eigen.eigenvalues();
  if (!(values(0) > 0.0) || values(0) <= 1e-12 * values(values.size() - 1))
    throw Error("fit", std::string(what) + ": projection collapses a view's variance constraint");
  return eigen.eigenvectors() * values.cwiseSqrt().cwiseInverse().asDiagonal() *
         eigen.eigenvectors().transpose();
}

void check_two_view(const Matrix& x1, const Matrix& x2, Index d, const char* what) {
  if (x1.cols() != x2.cols())
    throw Error("fit", std::string(what) + ": views disagree on sample count");
  if (x1.cols() < 2) throw Error("fit", std::string(what) + ": need at least two samples");
  if (d < 1) throw Error("fit", std::string(what) + ": d must be positive");
}

}  // namespace

LinearModel fit_cca(const Matrix& x1, const Matrix& x2, Index d) {
  check_two_view(x1, x2, d, "cca");
  if (d > std::min(x1.rows(), x2.rows()))
    throw Error("fit", "cca: d exceeds the smaller view dimension");

  Matrix c11 = x1 * x1.transpose();
  Matrix c22 = x2 * x2.transpose();
  const Matrix c12 = x1 * x2.transpose();
  c11.diagonal().array() += 1e-8 * c11.trace() / double(c11.rows());
  c22.diagonal().array() += 1e-8 * c22.trace() / double(c22.rows());

  WhitenedCca solved = whitened_cca(c11, c22, c12, d, "cca");
  joint_sign_fix(solved.w1, solved.w2);

  LinearModel model;
  model.method = "cca";
  model.per_view_W = {solved.w1, solved.w2};
  model.eigenvalues = solved.correlations;
  return model;
}

KernelModel fit_kcca(const Matrix& x1, const Matrix& x2, const KernelSpec& kernel, Index d) {
  check_two_view(x1, x2, d, "kcca");
  const Index m = x1.cols();
  if (d > m) throw Error("fit", "kcca: d exceeds the sample count");

  const Matrix k1 = gram(kernel, x1, x1);
  const Matrix k2 = gram(kernel, x2, x2);
  const Matrix k1k1 = k1 * k1;
  const Matrix k2k2 = k2 * k2;
  const double ridge = 1e-9 * (k1k1.trace() + k2k2.trace()) / (2.0 * double(m));

  Matrix c11 = k1k1;
  Matrix c22 = k2k2;
  c11.diagonal().array() += ridge;
  c22.diagonal().array() += ridge;

  WhitenedCca solved = whitened_cca(c11, c22, k1 * k2, d, "kcca");

  // The whitening enforced the ridged constraint; restore it under the exact
  // squared Grams (always possible: the ridge keeps both Grams within unity).
  solved.w1 = solved.w1 * inverse_sqrt(solved.w1.transpose() * k1k1 * solved.w1, "kcca");
  solved.w2 = solved.w2 * inverse_sqrt(solved.w2.transpose() * k2k2 * solved.w2, "kcca");
  joint_sign_fix(solved.w1, solved.w2);

  KernelModel model;
  model.method = "kcca";
  model.kernel = kernel;
  model.epsilon = ridge;
  model.per_view_A = {solved.w1, solved.w2};
  model.train_views = {x1, x2};
  model.eigenvalues = solved.correlations;
  return model;
}

LinearModel fit_mcca(const std::vector<Matrix>& views, Index d) {
  if (views.size() < 2) throw Error("fit", "mcca: need at least two views");
  const Index m = views.front().cols();
  for (const Matrix& x : views)
    if (x.cols() != m) throw Error("fit", "mcca: views disagree on sample count");
  if (d < 1) throw Error("fit", "mcca: d must be positive");
  Index total = 0;
  for (const Matrix& x : views) total += x.rows();
  if (d > total) throw Error("fit", "mcca: d exceeds the stacked dimension");

  Matrix cross = Matrix::Zero(total, total);
  Matrix within = Matrix::Zero(total, total);
  std::vector<Index> offsets(views.size() + 1, 0);
  for (std::size_t v = 0; v < views.size(); ++v)
    offsets[v + 1] = offsets[v] + views[v].rows();

  for (std::size_t i = 0; i < views.size(); ++i) {
    Matrix cii = views[i] * views[i].transpose();
    cii.diagonal().array() += 1e-8 * cii.trace() / double(cii.rows());
    within.block(offsets[i], offsets[i], views[i].rows(), views[i].rows()) = cii;
    for (std::size_t j = 0; j < views.size(); ++j) {
      if (i == j) continue;
      cross.block(offsets[i], offsets[j], views[i].rows(), views[j].rows()) =
          views[i] * views[j].transpose();
    }
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eigen(
      cross, within, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (eigen.info() != Eigen::Success)
    throw Error("fit", "mcca: generalized eigendecomposition failed");

  // Largest correlation sums live at the top of the ascending spectrum.
  Matrix stacked(total, d);
  Vector spectrum(d);
  for (Index i = 0; i < d; ++i) {
    stacked.col(i) = eigen.eigenvectors().col(total - 1 - i);
    spectrum(i) = eigen.eigenvalues()(total - 1 - i);
  }

  // Joint normalization spreads scale across views; restore the per-view
  // variance constraint W_i^T X_i X_i^T W_i = I without moving the span.
  std::vector<Matrix> per_view;
  per_view.reserve(views.size());
  for (std::size_t v = 0; v < views.size(); ++v) {
    Matrix w = stacked.middleRows(offsets[v], views[v].rows());
    const Matrix cii = views[v] * views[v].transpose();
    w = w * inverse_sqrt(w.transpose() * cii * w, "mcca");
    per_view.push_back(std::move(w));
  }
  Matrix restacked = stack_rows(per_view);
  fix_column_signs(restacked);

  LinearModel model;
  model.method = "mcca";
  model.eigenvalues = spectrum;
  std::vector<Index> heights;
  for (const Matrix& x : views) heights.push_back(x.rows());
  model.per_view_W = split_rows(restacked, heights);
  return model;
}

LinearModel fit_pls(const Matrix& x1, const Matrix& x2, Index d) {
  check_two_view(x1, x2, d, "pls");
  if (d > std::min(x1.rows(), x2.rows()))
    throw Error("fit", "pls: d exceeds the smaller view dimension");

  Eigen::JacobiSVD<Matrix> svd(x1 * x2.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix w1 = svd.matrixU().leftCols(d);
  Matrix w2 = svd.matrixV().leftCols(d);
  joint_sign_fix(w1, w2);

  LinearModel model;
  model.method = "pls";
  model.per_view_W = {w1, w2};
  model.eigenvalues = svd.singularValues().head(d);
  return model;
}

namespace {

struct ClassLayout {
  std::vector<std::vector<Index>> members;  // per dense class id
  std::vector<Index> offsets;               // view row offsets in the stacked space
  Index total = 0;
};

ClassLayout layout(const MultiViewDataset& data) {
  ClassLayout out;
  out.members.resize(static_cast<std::size_t>(data.num_classes));
  for (Index k = 0; k < data.object_count(); ++k)
    out.members[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(k)] - 1)].push_back(k);
  out.offsets.assign(data.views.size() + 1, 0);
  for (std::size_t v = 0; v < data.views.size(); ++v)
    out.offsets[v + 1] = out.offsets[v] + data.views[v].rows();
  out.total = out.offsets.back();
  return out;
}

}  // namespace

ScatterPair mvda_scatters(const MultiViewDataset& data) {
  data.validate();
  const ClassLayout lay = layout(data);
  const Index m = data.object_count();
  const int n = data.view_count();
  const Index total = lay.total;

  // Global mean of all lifted samples: block v holds view v's mean over m
  // samples, everything divided by the view count.
  Vector global = Vector::Zero(total);
  for (int v = 0; v < n; ++v)
    global.segment(lay.offsets[static_cast<std::size_t>(v)], data.views[static_cast<std::size_t>(v)].rows()) =
        data.views[static_cast<std::size_t>(v)].rowwise().sum();
  global /= double(m) * double(n);

  ScatterPair out;
  out.between = Matrix::Zero(total, total);
  out.within = Matrix::Zero(total, total);

  std::vector<Vector> class_means(static_cast<std::size_t>(data.num_classes));
  for (int c = 0; c < data.num_classes; ++c) {
    const auto& ids = lay.members[static_cast<std::size_t>(c)];
    if (ids.empty()) continue;
    Vector mean = Vector::Zero(total);
    for (int v = 0; v < n; ++v) {
      auto seg = mean.segment(lay.offsets[static_cast<std::size_t>(v)],
                              data.views[static_cast<std::size_t>(v)].rows());
      for (const Index k : ids) seg += data.views[static_cast<std::size_t>(v)].col(k);
    }
    const double weight = double(n) * double(ids.size());
    mean /= weight;
    class_means[static_cast<std::size_t>(c)] = mean;
    const Vector gap = mean - global;
    out.between += weight * (gap * gap.transpose());
  }

  for (int v = 0; v < n; ++v) {
    const Matrix& view = data.views[static_cast<std::size_t>(v)];
    for (Index k = 0; k < m; ++k) {
      const int c = data.labels[static_cast<std::size_t>(k)] - 1;
      Vector delta = -class_means[static_cast<std::size_t>(c)];
      delta.segment(lay.offsets[static_cast<std::size_t>(v)], view.rows()) += view.col(k);
      out.within += delta * delta.transpose();
    }
  }

  out.regularization = 1e-6 * out.within.trace() / double(total);
  return out;
}

ScatterPair mvmda_scatters(const MultiViewDataset& data) {
  data.validate();
  const ClassLayout lay = layout(data);
  const int n = data.view_count();
  const Index total = lay.total;

  // Per-view class means, lifted to the stacked space on demand.
  std::vector<std::vector<Vector>> view_class_means(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    auto& per_class = view_class_means[static_cast<std::size_t>(v)];
    per_class.resize(static_cast<std::size_t>(data.num_classes));
    const Matrix& view = data.views[static_cast<std::size_t>(v)];
    for (int c = 0; c < data.num_classes; ++c) {
      const auto& ids = lay.members[static_cast<std::size_t>(c)];
      if (ids.empty()) continue;
      Vector mean = Vector::Zero(view.rows());
      for (const Index k : ids) mean += view.col(k);
      per_class[static_cast<std::size_t>(c)] = mean / double(ids.size());
    }
  }

  ScatterPair out;
  out.between = Matrix::Zero(total, total);
  out.within = Matrix::Zero(total, total);

  for (int p = 0; p < data.num_classes; ++p) {
    if (lay.members[static_cast<std::size_t>(p)].empty()) continue;
    for (int q = 0; q < data.num_classes; ++q) {
      if (q == p || lay.members[static_cast<std::size_t>(q)].empty()) continue;
      Vector gap = Vector::Zero(total);
      for (int v = 0; v < n; ++v)
        gap.segment(lay.offsets[static_cast<std::size_t>(v)],
                    data.views[static_cast<std::size_t>(v)].rows()) =
            view_class_means[static_cast<std::size_t>(v)][static_cast<std::size_t>(p)] -
            view_class_means[static_cast<std::size_t>(v)][static_cast<std::size_t>(q)];
      out.between += gap * gap.transpose();
    }
  }

  for (int v = 0; v < n; ++v) {
    const Matrix& view = data.views[static_cast<std::size_t>(v)];
    const Index off = lay.offsets[static_cast<std::size_t>(v)];
    Matrix scatter = Matrix::Zero(view.rows(), view.rows());
    for (Index k = 0; k < view.cols(); ++k) {
      const int c = data.labels[static_cast<std::size_t>(k)] - 1;
      const Vector gap = view.col(k) - view_class_means[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)];
      scatter += gap * gap.transpose();
    }
    out.within.block(off, off, view.rows(), view.rows()) = scatter;
  }

  out.regularization = 1e-6 * out.within.trace() / double(total);
  return out;
}

namespace {

LinearModel discriminant_fit(const MultiViewDataset& data, const ScatterPair& scatter, Index d,
                             const char* what) {
  const Index total = scatter.between.rows();
  if (d < 1) throw Error("fit", std::string(what) + ": d must be positive");
  if (d > total) throw Error("fit", std::string(what) + ": d exceeds the stacked dimension");

  Matrix ridged = scatter.within;
  ridged.diagonal().array() += scatter.regularization;

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eigen(
      scatter.between, ridged, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (eigen.info() != Eigen::Success)
    throw Error("fit", std::string(what) + ": generalized eigendecomposition failed");

  Matrix stacked(total, d);
  Vector spectrum(d);
  for (Index i = 0; i < d; ++i) {
    stacked.col(i) = eigen.eigenvectors().col(total - 1 - i);
    spectrum(i) = eigen.eigenvalues()(total - 1 - i);
  }
  fix_column_signs(stacked);

  LinearModel model;
  model.method = what;
  model.eigenvalues = spectrum;
  std::vector<Index> heights;
  for (const Matrix& x : data.views) heights.push_back(x.rows());
  model.per_view_W = split_rows(stacked, heights);
  return model;
}

}  // namespace

LinearModel fit_mvda(const MultiViewDataset& data, Index d) {
  return discriminant_fit(data, mvda_scatters(data), d, "mvda");
}

LinearModel fit_mvmda(const MultiViewDataset& data, Index d) {
  return discriminant_fit(data, mvmda_scatters(data), d, "mvmda");
}

}  // namespace mvembed
