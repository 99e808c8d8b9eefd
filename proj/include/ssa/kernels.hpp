#pragma once

#include <Eigen/Dense>

namespace ssa::kernels {

// Dense kernels behind the hot loops (covariance, projections, distance and
// kernel matrices). Each output element is accumulated by exactly one thread
// in a fixed index order, so results are bitwise identical to the serial
// reference implementations in kernels::ref for any thread count. Tests
// assert that equality; the bench target compares throughput.

// A^T * B for A (n x p), B (n x q); covariance and basis products.
Eigen::MatrixXd crossprod(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// A * B for A (n x p), B (p x q); projections and per-group maps.
Eigen::MatrixXd matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Squared Euclidean distances between rows: out(i, j) = |a_i - b_j|^2.
Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// RBF kernel matrix: out(i, j) = exp(-gamma * |a_i - b_j|^2).
Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma);

int max_threads();

namespace ref {

// Serial reference implementations; same accumulation order as the parallel
// kernels above, kept for equality tests and the benchmark baseline.
Eigen::MatrixXd crossprod(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
Eigen::MatrixXd matmul(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma);

}  // namespace ref

}  // namespace ssa::kernels
