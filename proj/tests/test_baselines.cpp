#include <doctest.h>

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>

#include "mvembed/baselines.hpp"
#include "test_support.hpp"

using namespace mvembed;

namespace {

Matrix centered_gaussian(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x = rng.gaussian_matrix(rows, cols);
  const Vector mean = x.rowwise().mean();
  return x.colwise() - mean;
}

double pearson(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const Eigen::RowVectorXd ac = a.array() - a.mean();
  const Eigen::RowVectorXd bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

Matrix random_orthogonal(Index order, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix g = rng.gaussian_matrix(order, order);
  return Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(order, order);
}

// A sample of view v lifted into the stacked space: its coordinates in the
// view's block, zeros everywhere else. The scatter oracles below are built
// entirely from these, independently of the library's segment arithmetic.
Vector lift(const MultiViewDataset& data, int view, Index object) {
  Index total = 0;
  for (const Matrix& x : data.views) total += x.rows();
  Vector out = Vector::Zero(total);
  Index off = 0;
  for (int v = 0; v < view; ++v) off += data.views[static_cast<std::size_t>(v)].rows();
  out.segment(off, data.views[static_cast<std::size_t>(view)].rows()) =
      data.views[static_cast<std::size_t>(view)].col(object);
  return out;
}

double rel_frobenius(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

}  // namespace

TEST_CASE("identical views correlate perfectly under cca") {
  const Matrix x = centered_gaussian(5, 40, 401);
  const LinearModel model = fit_cca(x, x, 3);

  REQUIRE(model.eigenvalues.size() == 3);
  for (Index i = 0; i < 3; ++i)
    CHECK(model.eigenvalues[i] == doctest::Approx(1.0).epsilon(1e-6));

  const Matrix c11 = x * x.transpose();
  const Matrix g = model.per_view_W[0].transpose() * c11 * model.per_view_W[0];
  CHECK((g - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("cca eigenvalues are the empirical correlations of the projected series") {
  const Matrix x1 = centered_gaussian(4, 60, 403);
  Matrix x2 = centered_gaussian(6, 60, 404);
  x2.topRows(2) += 0.8 * x1.topRows(2);  // plant shared structure

  const LinearModel model = fit_cca(x1, x2, 3);
  const Matrix p1 = model.per_view_W[0].transpose() * x1;
  const Matrix p2 = model.per_view_W[1].transpose() * x2;
  for (Index i = 0; i < 3; ++i) {
    CHECK(model.eigenvalues[i] == doctest::Approx(pearson(p1.row(i), p2.row(i))).epsilon(1e-8));
    if (i > 0) CHECK(model.eigenvalues[i] <= model.eigenvalues[i - 1] + 1e-12);
  }
}

TEST_CASE("pls recovers an orthogonal relation between the views") {
  const Matrix x1 = centered_gaussian(5, 40, 407);
  const Matrix r = random_orthogonal(5, 408);
  const Matrix x2 = r * x1;

  const LinearModel model = fit_pls(x1, x2, 3);
  CHECK((model.per_view_W[1] - r * model.per_view_W[0]).cwiseAbs().maxCoeff() <= 1e-8);

  const Matrix g1 = model.per_view_W[0].transpose() * model.per_view_W[0];
  CHECK((g1 - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::JacobiSVD<Matrix> svd(x1 * x2.transpose());
  CHECK((model.eigenvalues - svd.singularValues().head(3)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("two-view mcca reproduces cca") {
  const Matrix x1 = centered_gaussian(4, 50, 409);
  Matrix x2 = centered_gaussian(5, 50, 410);
  x2.topRows(3) += 0.6 * x1.topRows(3);

  const LinearModel cca = fit_cca(x1, x2, 2);
  const LinearModel mcca = fit_mcca({x1, x2}, 2);

  CHECK((cca.eigenvalues - mcca.eigenvalues).cwiseAbs().maxCoeff() <= 1e-6);
  for (int v = 0; v < 2; ++v) {
    const Matrix& a = cca.per_view_W[static_cast<std::size_t>(v)];
    const Matrix& b = mcca.per_view_W[static_cast<std::size_t>(v)];
    const Matrix pa = a * (a.transpose() * a).inverse() * a.transpose();
    const Matrix pb = b * (b.transpose() * b).inverse() * b.transpose();
    CHECK((pa - pb).norm() <= 1e-5);
  }
}

TEST_CASE("three identical views give mcca its maximal spectrum") {
  const Matrix x = centered_gaussian(4, 30, 411);
  const LinearModel model = fit_mcca({x, x, x}, 2);

  // each view correlates perfectly with the other two
  for (Index i = 0; i < 2; ++i)
    CHECK(model.eigenvalues[i] == doctest::Approx(2.0).epsilon(1e-6));

  const Matrix p0 = model.per_view_W[0].transpose() * x;
  const Matrix p1 = model.per_view_W[1].transpose() * x;
  for (Index i = 0; i < 2; ++i)
    CHECK(std::abs(pearson(p0.row(i), p1.row(i))) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mcca restores the per-view variance constraint exactly") {
  const MultiViewDataset data = test_support::random_dataset(3, 3, 8, 5, 413);
  std::vector<Matrix> centered;
  for (const Matrix& x : data.views) {
    const Vector mean = x.rowwise().mean();
    centered.push_back(x.colwise() - mean);
  }
  const LinearModel model = fit_mcca(centered, 3);
  for (std::size_t v = 0; v < centered.size(); ++v) {
    const Matrix cii = centered[v] * centered[v].transpose();
    const Matrix g = model.per_view_W[v].transpose() * cii * model.per_view_W[v];
    CHECK((g - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("linear-kernel kcca matches primal cca on full-rank views") {
  // view dimension above the sample count makes the gram invertible
  const Matrix x1 = centered_gaussian(16, 12, 419);
  const Matrix x2 = centered_gaussian(16, 12, 420);

  const LinearModel primal = fit_cca(x1, x2, 3);
  const KernelModel dual = fit_kcca(x1, x2, {KernelKind::linear, 0.0}, 3);
  CHECK((primal.eigenvalues - dual.eigenvalues).cwiseAbs().maxCoeff() <= 1e-5);

  const Matrix k1 = gram({KernelKind::linear, 0.0}, x1, x1);
  const Matrix g = dual.per_view_A[0].transpose() * k1 * k1 * dual.per_view_A[0];
  CHECK((g - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("kcca projected series realize the reported kernel correlations") {
  const Matrix x1 = centered_gaussian(10, 14, 421);
  const Matrix x2 = centered_gaussian(10, 14, 422);
  const KernelSpec kernel{KernelKind::rbf, 4.0};
  const KernelModel model = fit_kcca(x1, x2, kernel, 2);

  const Matrix p1 = model.per_view_A[0].transpose() * gram(kernel, x1, x1);
  const Matrix p2 = model.per_view_A[1].transpose() * gram(kernel, x2, x2);
  for (Index i = 0; i < 2; ++i) {
    const double corr = p1.row(i).dot(p2.row(i)) / std::sqrt(p1.row(i).squaredNorm() *
                                                             p2.row(i).squaredNorm());
    CHECK(corr == doctest::Approx(model.eigenvalues[i]).epsilon(1e-5));
  }
}

TEST_CASE("discriminant scatter construction matches a lifted-sample oracle") {
  MultiViewDataset data = test_support::random_dataset(2, 3, 4, 3, 423);
  // unbalance the classes so the weights matter
  data.labels = {1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3};
  data.validate();

  const Index m = data.object_count();
  const int n = data.view_count();
  Index total = 0;
  for (const Matrix& x : data.views) total += x.rows();

  std::vector<std::vector<Index>> members(3);
  for (Index k = 0; k < m; ++k)
    members[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(k)] - 1)].push_back(k);

  SUBCASE("pooled-mean variant") {
    Vector global = Vector::Zero(total);
    for (int v = 0; v < n; ++v)
      for (Index k = 0; k < m; ++k) global += lift(data, v, k);
    global /= double(n) * double(m);

    Matrix between = Matrix::Zero(total, total);
    Matrix within = Matrix::Zero(total, total);
    for (int c = 0; c < 3; ++c) {
      Vector mean = Vector::Zero(total);
      for (int v = 0; v < n; ++v)
        for (const Index k : members[static_cast<std::size_t>(c)]) mean += lift(data, v, k);
      mean /= double(n) * double(members[static_cast<std::size_t>(c)].size());
      const Vector gap = mean - global;
      between += double(n) * double(members[static_cast<std::size_t>(c)].size()) *
                 (gap * gap.transpose());
      for (int v = 0; v < n; ++v)
        for (const Index k : members[static_cast<std::size_t>(c)]) {
          const Vector delta = lift(data, v, k) - mean;
          within += delta * delta.transpose();
        }
    }

    const ScatterPair pair = mvda_scatters(data);
    CHECK(rel_frobenius(pair.between, between) <= 1e-10);
    CHECK(rel_frobenius(pair.within, within) <= 1e-10);
    CHECK(pair.regularization ==
          doctest::Approx(1e-6 * within.trace() / double(total)).epsilon(1e-10));
  }

  SUBCASE("per-view mean-gap variant") {
    // per-view class means, lifted
    auto view_mean = [&](int v, int c) {
      Vector mean = Vector::Zero(total);
      for (const Index k : members[static_cast<std::size_t>(c)]) mean += lift(data, v, k);
      return Vector(mean / double(members[static_cast<std::size_t>(c)].size()));
    };

    Matrix between = Matrix::Zero(total, total);
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) {
        if (p == q) continue;
        Vector gap = Vector::Zero(total);
        for (int v = 0; v < n; ++v) gap += view_mean(v, p) - view_mean(v, q);
        between += gap * gap.transpose();
      }

    Matrix within = Matrix::Zero(total, total);
    for (int v = 0; v < n; ++v)
      for (Index k = 0; k < m; ++k) {
        const int c = data.labels[static_cast<std::size_t>(k)] - 1;
        const Vector delta = lift(data, v, k) - view_mean(v, c);
        within += delta * delta.transpose();
      }

    const ScatterPair pair = mvmda_scatters(data);
    CHECK(rel_frobenius(pair.between, between) <= 1e-10);
    CHECK(rel_frobenius(pair.within, within) <= 1e-10);
  }
}

TEST_CASE("per-view within scatter is block diagonal") {
  const MultiViewDataset data = test_support::random_dataset(2, 2, 5, 3, 427);
  const ScatterPair pair = mvmda_scatters(data);
  CHECK(pair.within.block(0, 3, 3, 3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(pair.within.block(3, 0, 3, 3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("discriminant fits order eigenvalues descending and satisfy the metric") {
  const MultiViewDataset data = test_support::random_dataset(2, 4, 6, 4, 429);
  for (const bool modular : {false, true}) {
    CAPTURE(modular);
    const LinearModel model = modular ? fit_mvmda(data, 3) : fit_mvda(data, 3);
    for (Index i = 1; i < 3; ++i) CHECK(model.eigenvalues[i] <= model.eigenvalues[i - 1] + 1e-12);

    const ScatterPair pair = modular ? mvmda_scatters(data) : mvda_scatters(data);
    Matrix ridged = pair.within;
    ridged.diagonal().array() += pair.regularization;
    const Matrix g = model.stacked().transpose() * ridged * model.stacked();
    CHECK((g - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("well-separated classes dominate the within-class noise") {
  SyntheticSpec spec;
  spec.views = 2;
  spec.classes = 3;
  spec.objects_per_class = 10;
  spec.ambient_dim = 4;
  spec.class_separation = 12.0;
  spec.noise_sigma = 0.1;
  spec.seed = 431;
  const LinearModel model = fit_mvda(generate_synthetic(spec), 2);
  CHECK(model.eigenvalues[0] > 10.0);
}

TEST_CASE("baseline fits are bitwise deterministic") {
  const Matrix x1 = centered_gaussian(5, 30, 433);
  const Matrix x2 = centered_gaussian(6, 30, 434);
  CHECK((fit_cca(x1, x2, 2).stacked() - fit_cca(x1, x2, 2).stacked()).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((fit_pls(x1, x2, 2).stacked() - fit_pls(x1, x2, 2).stacked()).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((fit_mcca({x1, x2}, 2).stacked() - fit_mcca({x1, x2}, 2).stacked())
            .cwiseAbs()
            .maxCoeff() == 0.0);

  const MultiViewDataset data = test_support::random_dataset(2, 3, 5, 4, 435);
  CHECK((fit_mvda(data, 2).stacked() - fit_mvda(data, 2).stacked()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((fit_mvmda(data, 2).stacked() - fit_mvmda(data, 2).stacked()).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("baseline dimension and shape misuses are refused") {
  const Matrix x1 = centered_gaussian(3, 20, 437);
  const Matrix x2 = centered_gaussian(4, 20, 438);
  CHECK_THROWS_AS(fit_cca(x1, x2, 4), Error);        // exceeds the smaller view
  CHECK_THROWS_AS(fit_cca(x1, x2, 0), Error);
  CHECK_THROWS_AS(fit_pls(x1, x2.leftCols(10), 2), Error);  // sample mismatch
  CHECK_THROWS_AS(fit_kcca(x1, x2, {KernelKind::rbf, 1.0}, 21), Error);
  CHECK_THROWS_AS(fit_mcca({x1}, 2), Error);

  const MultiViewDataset data = test_support::random_dataset(2, 2, 4, 3, 439);
  CHECK_THROWS_AS(fit_mvda(data, 7), Error);  // exceeds the stacked dimension
}
