#include "ssa/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "ssa/error.hpp"
#include "ssa/kernels.hpp"

namespace ssa::linalg {

namespace {

constexpr double kTieGap = 1e-10;

void check_finite(const Eigen::MatrixXd& x, const char* what) {
  if (!x.allFinite()) raise(ErrorCode::NonFiniteInput, what);
}

// Flip column signs so the entry of largest absolute value is non-negative;
// exact ties go to the lowest row index.
void normalize_signs(Eigen::MatrixXd& components) {
  for (Eigen::Index j = 0; j < components.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = std::abs(components(0, j));
    for (Eigen::Index i = 1; i < components.rows(); ++i) {
      double v = std::abs(components(i, j));
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    if (components(arg, j) < 0.0) components.col(j) = -components.col(j);
  }
}

bool lex_less(const Eigen::MatrixXd& m, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, a) < m(i, b)) return true;
    if (m(i, a) > m(i, b)) return false;
  }
  return false;
}

// Within runs of near-equal eigenvalues the eigendecomposition's column order
// is arbitrary; reorder those columns lexicographically so ties are stable.
void order_ties(Eigen::MatrixXd& components, const Eigen::VectorXd& eigenvalues) {
  Eigen::Index d = eigenvalues.size();
  Eigen::Index run_start = 0;
  for (Eigen::Index i = 1; i <= d; ++i) {
    bool run_ends = (i == d) || (eigenvalues(i - 1) - eigenvalues(i) >= kTieGap);
    if (!run_ends) continue;
    if (i - run_start > 1) {
      std::vector<Eigen::Index> order(i - run_start);
      std::iota(order.begin(), order.end(), run_start);
      std::sort(order.begin(), order.end(),
                [&](Eigen::Index a, Eigen::Index b) { return lex_less(components, a, b); });
      Eigen::MatrixXd block(components.rows(), i - run_start);
      for (Eigen::Index k = 0; k < block.cols(); ++k) block.col(k) = components.col(order[k]);
      components.middleCols(run_start, block.cols()) = block;
    }
    run_start = i;
  }
}

}  // namespace

Eigen::Index effective_dim(Eigen::Index requested, Eigen::Index n, Eigen::Index ambient) {
  if (n < 2) raise(ErrorCode::DegenerateInput, "need at least 2 samples");
  return std::min(requested, std::min(n - 1, ambient));
}

SubspaceBasis fit_pca(const Eigen::MatrixXd& x, Eigen::Index d) {
  const Eigen::Index n = x.rows();
  const Eigen::Index ambient = x.cols();
  if (n < 2) raise(ErrorCode::DegenerateInput, "PCA needs at least 2 samples");
  if (d < 1) raise(ErrorCode::InvalidConfig, "subspace dimension must be positive");
  if (d > std::min(n - 1, ambient))
    raise(ErrorCode::DimensionTooLarge, "d exceeds min(n - 1, D)");
  check_finite(x, "PCA input contains a non-finite entry");

  SubspaceBasis basis;
  basis.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - basis.mean;

  Eigen::MatrixXd components;
  Eigen::VectorXd eigenvalues;
  if (n - 1 >= ambient) {
    Eigen::MatrixXd cov = kernels::crossprod(centered, centered) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
      raise(ErrorCode::NonFiniteInput, "eigendecomposition failed");
    // solver returns ascending order
    components.resize(ambient, d);
    eigenvalues.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      components.col(j) = solver.eigenvectors().col(ambient - 1 - j);
      eigenvalues(j) = solver.eigenvalues()(ambient - 1 - j);
    }
  } else {
    // Fewer samples than dimensions: thin SVD of the centered rows. V's
    // columns stay orthonormal even at zero singular values.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    components = svd.matrixV().leftCols(d);
    eigenvalues = svd.singularValues().head(d).array().square() / static_cast<double>(n - 1);
  }

  eigenvalues = eigenvalues.cwiseMax(0.0);
  normalize_signs(components);
  order_ties(components, eigenvalues);

  basis.components = std::move(components);
  basis.eigenvalues = std::move(eigenvalues);
  return basis;
}

Eigen::MatrixXd project(const SubspaceBasis& basis, const Eigen::MatrixXd& x) {
  if (x.cols() != basis.ambient_dim())
    raise(ErrorCode::DimensionMismatch, "project: sample dimension does not match basis");
  check_finite(x, "project input contains a non-finite entry");
  Eigen::MatrixXd centered = x.rowwise() - basis.mean;
  return kernels::matmul(centered, basis.components);
}

Eigen::MatrixXd reconstruct(const SubspaceBasis& basis, const Eigen::MatrixXd& z) {
  if (z.cols() != basis.dim())
    raise(ErrorCode::DimensionMismatch, "reconstruct: coordinate dimension does not match basis");
  check_finite(z, "reconstruct input contains a non-finite entry");
  Eigen::MatrixXd transpose = basis.components.transpose();
  Eigen::MatrixXd ambient = kernels::matmul(z, transpose);
  return ambient.rowwise() + basis.mean;
}

AlignmentTransform solve_alignment(const SubspaceBasis& c_s, const SubspaceBasis& c_t) {
  if (c_s.ambient_dim() != c_t.ambient_dim() || c_s.dim() != c_t.dim())
    raise(ErrorCode::DimensionMismatch, "solve_alignment: bases have different shapes");
  return AlignmentTransform{kernels::crossprod(c_s.components, c_t.components)};
}

}  // namespace ssa::linalg
