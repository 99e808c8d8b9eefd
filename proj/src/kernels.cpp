#include "ssa/kernels.hpp"

#include "ssa/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>

namespace ssa::kernels {

namespace {

inline void check_inner(Eigen::Index lhs, Eigen::Index rhs, const char* what) {
  if (lhs != rhs) raise(ErrorCode::DimensionMismatch, what);
}

// out(i, j) = sum_k a(k, i) * b(k, j); columns are contiguous in Eigen's
// column-major layout, so the k loop streams both operands.
inline double col_dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      Eigen::Index i, Eigen::Index j) {
  const double* ai = a.col(i).data();
  const double* bj = b.col(j).data();
  const Eigen::Index n = a.rows();
  double s = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) s += ai[k] * bj[k];
  return s;
}

inline double row_dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      Eigen::Index i, Eigen::Index j) {
  const Eigen::Index p = a.cols();
  double s = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) s += a(i, k) * b(k, j);
  return s;
}

inline double row_sqdist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                         Eigen::Index i, Eigen::Index j) {
  const Eigen::Index dim = a.cols();
  double s = 0.0;
  for (Eigen::Index k = 0; k < dim; ++k) {
    double diff = a(i, k) - b(j, k);
    s += diff * diff;
  }
  return s;
}

}  // namespace

Eigen::MatrixXd crossprod(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_inner(a.rows(), b.rows(), "crossprod: row counts differ");
  Eigen::MatrixXd out(a.cols(), b.cols());
  const Eigen::Index p = a.cols(), q = b.cols();
#pragma omp parallel for collapse(2) schedule(static)
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < q; ++j) out(i, j) = col_dot(a, b, i, j);
  return out;
}

Eigen::MatrixXd matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_inner(a.cols(), b.rows(), "matmul: inner dimensions differ");
  Eigen::MatrixXd out(a.rows(), b.cols());
  const Eigen::Index n = a.rows(), q = b.cols();
#pragma omp parallel for collapse(2) schedule(static)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < q; ++j) out(i, j) = row_dot(a, b, i, j);
  return out;
}

Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_inner(a.cols(), b.cols(), "pairwise_sqdist: column counts differ");
  Eigen::MatrixXd out(a.rows(), b.rows());
  const Eigen::Index na = a.rows(), nb = b.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < nb; ++j) out(i, j) = row_sqdist(a, b, i, j);
  return out;
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
  check_inner(a.cols(), b.cols(), "rbf_kernel: column counts differ");
  Eigen::MatrixXd out(a.rows(), b.rows());
  const Eigen::Index na = a.rows(), nb = b.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < nb; ++j) out(i, j) = std::exp(-gamma * row_sqdist(a, b, i, j));
  return out;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace ref {

Eigen::MatrixXd crossprod(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_inner(a.rows(), b.rows(), "crossprod: row counts differ");
  Eigen::MatrixXd out(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) out(i, j) = col_dot(a, b, i, j);
  return out;
}

Eigen::MatrixXd matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_inner(a.cols(), b.rows(), "matmul: inner dimensions differ");
  Eigen::MatrixXd out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) out(i, j) = row_dot(a, b, i, j);
  return out;
}

Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_inner(a.cols(), b.cols(), "pairwise_sqdist: column counts differ");
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = row_sqdist(a, b, i, j);
  return out;
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
  check_inner(a.cols(), b.cols(), "rbf_kernel: column counts differ");
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      out(i, j) = std::exp(-gamma * row_sqdist(a, b, i, j));
  return out;
}

}  // namespace ref

}  // namespace ssa::kernels
