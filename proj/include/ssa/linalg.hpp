#pragma once

#include <Eigen/Dense>

namespace ssa::linalg {

// Centered orthonormal principal-component basis of one domain.
//
// Invariants: components has orthonormal columns (within 1e-8); eigenvalues
// are non-negative and non-increasing; in each column the entry of largest
// absolute value is non-negative (ties broken by lowest row index).
struct SubspaceBasis {
  Eigen::MatrixXd components;   // D x d
  Eigen::RowVectorXd mean;      // length D
  Eigen::VectorXd eigenvalues;  // length d

  Eigen::Index dim() const { return components.cols(); }
  Eigen::Index ambient_dim() const { return components.rows(); }
};

// The closed-form subspace-to-subspace map, a product of two
// orthonormal-column matrices (all singular values <= 1).
struct AlignmentTransform {
  Eigen::MatrixXd m;  // d x d
};

// Top-d principal components of the rows of x. Deterministic: full symmetric
// eigendecomposition of the explicit covariance when n - 1 >= D, thin SVD of
// the centered rows otherwise. Covariance is normalized by 1/(n-1).
//
// Raises DegenerateInput when n < 2, DimensionTooLarge when
// d > min(n - 1, D). Near-degenerate eigenvalue ties (gap < 1e-10) are
// ordered by the sign-normalized lexicographic order of the eigenvectors.
SubspaceBasis fit_pca(const Eigen::MatrixXd& x, Eigen::Index d);

// (x - mean) * components, per row.
Eigen::MatrixXd project(const SubspaceBasis& basis, const Eigen::MatrixXd& x);

// z * components^T + mean, per row.
Eigen::MatrixXd reconstruct(const SubspaceBasis& basis, const Eigen::MatrixXd& z);

// M* = C_S^T C_T, the exact minimizer of |C_S M - C_T|_F over d x d matrices.
AlignmentTransform solve_alignment(const SubspaceBasis& c_s, const SubspaceBasis& c_t);

// min(requested, n - 1, D); raises DegenerateInput when n < 2. Callers that
// clamp (the alignment and evaluation layers) surface a warning when the
// result is smaller than requested.
Eigen::Index effective_dim(Eigen::Index requested, Eigen::Index n, Eigen::Index ambient);

}  // namespace ssa::linalg
