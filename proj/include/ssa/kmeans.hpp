#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace ssa::kmeans {

struct Result {
  std::vector<int> assignments;  // per row
  Eigen::MatrixXd centroids;     // k x D
  int iterations = 0;
  bool converged = false;        // assignment fixpoint reached within the cap
};

// Lloyd's algorithm with k-means++ seeding. Deterministic given the seed:
// assignment ties go to the lowest cluster index, empty clusters are repaired
// by promoting the point farthest from its assigned centroid. Stops at the
// assignment fixpoint or after max_iterations.
Result run(const Eigen::MatrixXd& rows, int k, std::uint64_t rng_seed,
           int max_iterations = 300);

}  // namespace ssa::kmeans
