#include "ssa/kmeans.hpp"

#include <limits>

#include "ssa/error.hpp"
#include "ssa/kernels.hpp"
#include "ssa/rng.hpp"

namespace ssa::kmeans {

namespace {

// Nearest centroid per row; ties to the lowest cluster index.
void assign(const Eigen::MatrixXd& dist2, std::vector<int>& out) {
  const Eigen::Index n = dist2.rows(), k = dist2.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = dist2(i, 0);
    for (Eigen::Index c = 1; c < k; ++c) {
      if (dist2(i, c) < best_d) {
        best_d = dist2(i, c);
        best = static_cast<int>(c);
      }
    }
    out[static_cast<std::size_t>(i)] = best;
  }
}

}  // namespace

Result run(const Eigen::MatrixXd& rows, int k, std::uint64_t rng_seed, int max_iterations) {
  const Eigen::Index n = rows.rows();
  if (k < 1) raise(ErrorCode::InvalidConfig, "k must be positive");
  if (n < k) raise(ErrorCode::TooFewSamples, "fewer samples than clusters");

  rng::Rng rng(rng_seed);
  Result result;
  result.centroids.resize(k, rows.cols());

  // k-means++ seeding
  Eigen::Index first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  result.centroids.row(0) = rows.row(first);
  Eigen::VectorXd min_d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    Eigen::MatrixXd d2 = kernels::pairwise_sqdist(rows, result.centroids.topRows(c).bottomRows(1));
    min_d2 = min_d2.cwiseMin(d2.col(0));
    double total = min_d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += min_d2(i);
        if (acc > r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    result.centroids.row(c) = rows.row(pick);
  }

  result.assignments.assign(static_cast<std::size_t>(n), 0);
  std::vector<int> next(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < max_iterations; ++iter) {
    Eigen::MatrixXd d2 = kernels::pairwise_sqdist(rows, result.centroids);
    assign(d2, next);

    // Repair empty clusters by promoting the point farthest from its
    // centroid (ties to the lowest row index), then reassign.
    bool repaired = false;
    for (int c = 0; c < k; ++c) {
      bool empty = true;
      for (Eigen::Index i = 0; i < n; ++i)
        if (next[static_cast<std::size_t>(i)] == c) {
          empty = false;
          break;
        }
      if (!empty) continue;
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double di = d2(i, next[static_cast<std::size_t>(i)]);
        if (di > far_d) {
          far_d = di;
          far = i;
        }
      }
      result.centroids.row(c) = rows.row(far);
      next[static_cast<std::size_t>(far)] = c;
      repaired = true;
    }

    result.iterations = iter + 1;
    if (!repaired && next == result.assignments && iter > 0) {
      result.converged = true;
      break;
    }
    result.assignments = next;

    // Centroid update: each cluster mean accumulated in row order.
#pragma omp parallel for schedule(static)
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(rows.cols());
      Eigen::Index count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (result.assignments[static_cast<std::size_t>(i)] == c) {
          sum += rows.row(i);
          ++count;
        }
      }
      if (count > 0) result.centroids.row(c) = sum / static_cast<double>(count);
    }
  }
  return result;
}

}  // namespace ssa::kmeans
