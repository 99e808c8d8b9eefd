#include <doctest.h>

#include <cmath>

#include "ssa/error.hpp"
#include "ssa/linalg.hpp"
#include "support/jacobi_oracle.hpp"
#include "support/test_support.hpp"

using namespace ssa::linalg;
using test_support::random_matrix;
using test_support::random_orthonormal;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

double orthonormality_error(const SubspaceBasis& b) {
  Eigen::MatrixXd gram = b.components.transpose() * b.components;
  return max_abs(gram - Eigen::MatrixXd::Identity(b.dim(), b.dim()));
}

}  // namespace

TEST_CASE("fit_pca recovers the dominant axis") {
  Eigen::MatrixXd x(4, 2);
  x << 2, 0, -2, 0, 1, 0, -1, 0;
  SubspaceBasis b = fit_pca(x, 1);
  CHECK(b.mean(0) == doctest::Approx(0.0));
  CHECK(b.mean(1) == doctest::Approx(0.0));
  CHECK(b.components(0, 0) == doctest::Approx(1.0));
  CHECK(b.components(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("fit_pca recovers the diagonal direction") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 1, -1, -1, 2, 2, -2, -2;
  SubspaceBasis b = fit_pca(x, 1);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(b.components(0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
  CHECK(b.components(1, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-12));
}

TEST_CASE("fit_pca eigenvalues match an independent Jacobi oracle") {
  Eigen::MatrixXd x = random_matrix(50, 8, 42);
  SubspaceBasis b = fit_pca(x, 3);
  CHECK(orthonormality_error(b) < 1e-8);

  auto oracle = jacobi_oracle::eigenvalues_desc(jacobi_oracle::naive_covariance(x));
  for (int i = 0; i < 3; ++i)
    CHECK(b.eigenvalues(i) == doctest::Approx(oracle[static_cast<std::size_t>(i)]).epsilon(1e-8));
}

TEST_CASE("fit_pca uses the SVD path when n < D and stays orthonormal") {
  Eigen::MatrixXd x = random_matrix(6, 12, 7);
  SubspaceBasis b = fit_pca(x, 5);
  CHECK(orthonormality_error(b) < 1e-8);
  auto oracle = jacobi_oracle::eigenvalues_desc(jacobi_oracle::naive_covariance(x));
  for (int i = 0; i < 5; ++i)
    CHECK(b.eigenvalues(i) == doctest::Approx(oracle[static_cast<std::size_t>(i)]).epsilon(1e-8));
}

TEST_CASE("eigenvalue sum equals total variance at full dimension") {
  for (auto [n, d] : {std::pair{40, 6}, {5, 9}}) {
    Eigen::MatrixXd x = random_matrix(n, d, 11 + n);
    Eigen::Index full = std::min<Eigen::Index>(n - 1, d);
    SubspaceBasis b = fit_pca(x, full);
    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    double total_var = centered.squaredNorm() / static_cast<double>(n - 1);
    CHECK(b.eigenvalues.sum() == doctest::Approx(total_var).epsilon(1e-8));
  }
}

TEST_CASE("eigenvalues are non-negative, non-increasing, sign convention holds") {
  Eigen::MatrixXd x = random_matrix(30, 7, 3);
  SubspaceBasis b = fit_pca(x, 6);
  for (Eigen::Index i = 0; i < b.eigenvalues.size(); ++i) {
    CHECK(b.eigenvalues(i) >= 0.0);
    if (i > 0) CHECK(b.eigenvalues(i - 1) >= b.eigenvalues(i) - 1e-10);
  }
  for (Eigen::Index j = 0; j < b.dim(); ++j) {
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < b.ambient_dim(); ++i)
      if (std::abs(b.components(i, j)) > std::abs(b.components(arg, j))) arg = i;
    CHECK(b.components(arg, j) >= 0.0);
  }
}

TEST_CASE("degenerate eigenvalue ties are ordered deterministically") {
  // exactly isotropic: covariance is a multiple of the identity
  Eigen::MatrixXd x(4, 2);
  x << 1, 0, -1, 0, 0, 1, 0, -1;
  SubspaceBasis a = fit_pca(x, 2);
  SubspaceBasis b = fit_pca(x, 2);
  CHECK(max_abs(a.components - b.components) == 0.0);
  CHECK(orthonormality_error(a) < 1e-8);
  // lexicographic order within the tie run
  CHECK(jacobi_oracle::eigenvalues_desc(jacobi_oracle::naive_covariance(x))[0] ==
        doctest::Approx(a.eigenvalues(0)));
}

TEST_CASE("project and reconstruct") {
  SubspaceBasis identity2;
  identity2.components = Eigen::MatrixXd::Identity(2, 2);
  identity2.mean = Eigen::RowVectorXd::Zero(2);
  identity2.eigenvalues = Eigen::VectorXd::Ones(2);

  Eigen::MatrixXd p(1, 2);
  p << 3, 4;
  CHECK(max_abs(project(identity2, p) - p) == 0.0);
  CHECK(max_abs(reconstruct(identity2, p) - p) == 0.0);

  SubspaceBasis shifted = identity2;
  shifted.mean << 1, 1;
  Eigen::MatrixXd q(1, 2);
  q << 1, 1;
  CHECK(max_abs(project(shifted, q)) == 0.0);

  Eigen::MatrixXd zero_z = Eigen::MatrixXd::Zero(1, 2);
  CHECK(max_abs(reconstruct(shifted, zero_z) - q) == 0.0);
}

TEST_CASE("projector is idempotent on the fitted subspace") {
  Eigen::MatrixXd x = random_matrix(50, 8, 42);
  SubspaceBasis b = fit_pca(x, 3);

  // points already inside the subspace come back unchanged
  Eigen::MatrixXd z = random_matrix(20, 3, 9);
  Eigen::MatrixXd ambient = reconstruct(b, z);
  CHECK(max_abs(project(b, ambient) - z) < 1e-8);

  Eigen::MatrixXd once = reconstruct(b, project(b, x));
  Eigen::MatrixXd twice = reconstruct(b, project(b, once));
  CHECK(max_abs(once - twice) < 1e-8);
}

TEST_CASE("solve_alignment on identical bases is the identity") {
  Eigen::MatrixXd x = random_matrix(30, 5, 12);
  SubspaceBasis b = fit_pca(x, 3);
  AlignmentTransform m = solve_alignment(b, b);
  CHECK(max_abs(m.m - Eigen::MatrixXd::Identity(3, 3)) < 1e-12);
}

TEST_CASE("solve_alignment maps a permutation of axes") {
  SubspaceBasis cs, ct;
  cs.components = Eigen::MatrixXd::Identity(2, 2);
  ct.components.resize(2, 2);
  ct.components << 0, 1, 1, 0;
  cs.mean = ct.mean = Eigen::RowVectorXd::Zero(2);
  cs.eigenvalues = ct.eigenvalues = Eigen::VectorXd::Ones(2);
  AlignmentTransform m = solve_alignment(cs, ct);
  Eigen::MatrixXd expected(2, 2);
  expected << 0, 1, 1, 0;
  CHECK(max_abs(m.m - expected) == 0.0);
}

TEST_CASE("solve_alignment recovers a rotation") {
  const double theta = 30.0 * 3.14159265358979323846 / 180.0;
  SubspaceBasis cs, ct;
  cs.components = Eigen::MatrixXd::Identity(2, 2);
  ct.components.resize(2, 2);
  ct.components << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  cs.mean = ct.mean = Eigen::RowVectorXd::Zero(2);
  cs.eigenvalues = ct.eigenvalues = Eigen::VectorXd::Ones(2);
  AlignmentTransform m = solve_alignment(cs, ct);
  CHECK(max_abs(m.m - ct.components) < 1e-12);
}

TEST_CASE("closed-form optimality and normal equations") {
  ssa::rng::Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    SubspaceBasis cs, ct;
    cs.components = random_orthonormal(10, 4, 1000 + trial);
    ct.components = random_orthonormal(10, 4, 2000 + trial);
    cs.mean = ct.mean = Eigen::RowVectorXd::Zero(10);
    cs.eigenvalues = ct.eigenvalues = Eigen::VectorXd::Ones(4);
    AlignmentTransform m = solve_alignment(cs, ct);

    double optimal = (cs.components * m.m - ct.components).norm();
    for (int p = 0; p < 10; ++p) {
      Eigen::MatrixXd perturbed = m.m + 0.1 * random_matrix(4, 4, 3000 + trial * 10 + p);
      double alt = (cs.components * perturbed - ct.components).norm();
      CHECK(optimal <= alt + 1e-9);
    }
    Eigen::MatrixXd residual =
        cs.components.transpose() * (cs.components * m.m - ct.components);
    CHECK(max_abs(residual) < 1e-9);

    // all singular values of a product of orthonormal-column matrices stay <= 1
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.m);
    CHECK(svd.singularValues().maxCoeff() <= 1.0 + 1e-8);
  }
}

TEST_CASE("fit_pca is deterministic") {
  Eigen::MatrixXd x = random_matrix(25, 6, 5);
  SubspaceBasis a = fit_pca(x, 4);
  SubspaceBasis b = fit_pca(x, 4);
  CHECK(max_abs(a.components - b.components) == 0.0);
  CHECK(max_abs(a.eigenvalues - b.eigenvalues) == 0.0);
  CHECK(max_abs(a.mean - b.mean) == 0.0);
}

TEST_CASE("fit_pca error cases") {
  Eigen::MatrixXd one_row(1, 3);
  one_row << 1, 2, 3;
  CHECK_THROWS_WITH_AS(fit_pca(one_row, 1), doctest::Contains("DegenerateInput"), ssa::Error);

  Eigen::MatrixXd x = random_matrix(4, 3, 2);
  CHECK_THROWS_WITH_AS(fit_pca(x, 4), doctest::Contains("DimensionTooLarge"), ssa::Error);

  Eigen::MatrixXd bad = x;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(fit_pca(bad, 2), ssa::Error);

  SubspaceBasis b = fit_pca(x, 2);
  Eigen::MatrixXd wrong(2, 5);
  wrong.setZero();
  CHECK_THROWS_WITH_AS(project(b, wrong), doctest::Contains("DimensionMismatch"), ssa::Error);
  CHECK_THROWS_WITH_AS(reconstruct(b, wrong), doctest::Contains("DimensionMismatch"), ssa::Error);
}

TEST_CASE("effective_dim clamps and rejects degenerate input") {
  CHECK(effective_dim(10, 5, 100) == 4);
  CHECK(effective_dim(3, 50, 100) == 3);
  CHECK(effective_dim(10, 50, 6) == 6);
  CHECK_THROWS_AS(effective_dim(1, 1, 4), ssa::Error);
}
