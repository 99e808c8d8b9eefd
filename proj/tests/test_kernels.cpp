#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ssa/error.hpp"
#include "ssa/kernels.hpp"
#include "support/test_support.hpp"

using test_support::random_matrix;
namespace kernels = ssa::kernels;

namespace {

// Bitwise equality: parallel kernels accumulate each output element in the
// same order as the serial reference.
bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return false;
  return true;
}

}  // namespace

TEST_CASE("parallel kernels match the serial reference bitwise") {
  for (auto [n, p, q] : {std::tuple{17, 5, 3}, {64, 8, 8}, {1, 4, 2}, {33, 7, 1}}) {
    auto a = random_matrix(n, p, 100 + n);
    auto b = random_matrix(n, q, 200 + n);
    CHECK(bitwise_equal(kernels::crossprod(a, b), kernels::ref::crossprod(a, b)));

    auto c = random_matrix(p, q, 300 + n);
    CHECK(bitwise_equal(kernels::matmul(a.transpose(), a), kernels::ref::matmul(a.transpose(), a)));
    CHECK(bitwise_equal(kernels::matmul(a, c), kernels::ref::matmul(a, c)));

    auto d = random_matrix(q, p, 400 + n);
    CHECK(bitwise_equal(kernels::pairwise_sqdist(a, a), kernels::ref::pairwise_sqdist(a, a)));
    CHECK(bitwise_equal(kernels::rbf_kernel(a.leftCols(std::min(p, q)), d.leftCols(std::min(p, q)), 0.3),
                        kernels::ref::rbf_kernel(a.leftCols(std::min(p, q)), d.leftCols(std::min(p, q)), 0.3)));
  }
}

#ifdef _OPENMP
TEST_CASE("kernel results are independent of the thread count") {
  auto a = random_matrix(41, 9, 7);
  auto b = random_matrix(41, 6, 8);
  Eigen::MatrixXd expected = kernels::ref::crossprod(a, b);
  Eigen::MatrixXd expected_d = kernels::ref::pairwise_sqdist(a, a);
  int saved = omp_get_max_threads();
  for (int threads : {1, 2, 3, 7}) {
    omp_set_num_threads(threads);
    CHECK(bitwise_equal(kernels::crossprod(a, b), expected));
    CHECK(bitwise_equal(kernels::pairwise_sqdist(a, a), expected_d));
  }
  omp_set_num_threads(saved);
}
#endif

TEST_CASE("crossprod agrees with the matrix product") {
  auto a = random_matrix(30, 6, 1);
  auto b = random_matrix(30, 4, 2);
  Eigen::MatrixXd expected = a.transpose() * b;
  CHECK((kernels::crossprod(a, b) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pairwise_sqdist values") {
  Eigen::MatrixXd a(2, 2);
  a << 0, 0, 3, 4;
  Eigen::MatrixXd b(1, 2);
  b << 0, 0;
  Eigen::MatrixXd d = kernels::pairwise_sqdist(a, b);
  CHECK(d(0, 0) == 0.0);
  CHECK(d(1, 0) == 25.0);
}

TEST_CASE("kernels reject mismatched shapes") {
  auto a = random_matrix(3, 2, 1);
  auto b = random_matrix(4, 2, 2);
  CHECK_THROWS_AS(kernels::crossprod(a, b), ssa::Error);
  CHECK_THROWS_AS(kernels::matmul(a, b), ssa::Error);
  auto c = random_matrix(3, 5, 3);
  CHECK_THROWS_AS(kernels::pairwise_sqdist(a, c), ssa::Error);
}
