#include "mvembed/preprocess.hpp"

#include <sstream>

namespace mvembed {

PcaModel pca_fit(const Matrix& samples, Index target_dim) {
  const Index d = samples.rows();
  const Index m = samples.cols();
  if (m < 1) throw Error("pca", "no samples");
  if (target_dim < 1 || target_dim > d) {
    std::ostringstream os;
    os << "target_dim " << target_dim << " outside [1, " << d << "]";
    throw Error("pca", os.str());
  }

  PcaModel model;
  model.mean = samples.rowwise().mean();
  const Matrix centered = samples.colwise() - model.mean;
  const Matrix covariance = centered * centered.transpose() / double(m);

  Eigen::SelfAdjointEigenSolver<Matrix> eigen(covariance);
  if (eigen.info() != Eigen::Success) throw Error("pca", "covariance eigendecomposition failed");
  const Vector values = eigen.eigenvalues();  // ascending

  const double scale = std::max(values(d - 1), 0.0);
  Index rank = 0;
  for (Index i = 0; i < d; ++i)
    if (values(i) > scale * 1e-12 && values(i) > 0.0) ++rank;
  if (target_dim > rank) {
    std::ostringstream os;
    os << "target_dim " << target_dim << " exceeds data rank " << rank
       << "; choose a smaller dimension";
    throw Error("pca", os.str());
  }

  model.basis.resize(d, target_dim);
  model.explained_variance.resize(target_dim);
  for (Index i = 0; i < target_dim; ++i) {
    model.basis.col(i) = eigen.eigenvectors().col(d - 1 - i);
    model.explained_variance(i) = values(d - 1 - i);
  }
  fix_column_signs(model.basis);
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& samples) {
  if (samples.rows() != model.input_dim()) {
    std::ostringstream os;
    os << "samples have dimension " << samples.rows() << " but the model expects "
       << model.input_dim();
    throw Error("pca", os.str());
  }
  return model.basis.transpose() * (samples.colwise() - model.mean);
}

}  // namespace mvembed
