#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ssa/alignment.hpp"

namespace ssa::temporal {

// Samples of one or more time-steps in a single frame. Level 0 holds one
// step's rows in ambient coordinates; every level above holds the joint
// space of a contiguous step window at the shared subspace dimension.
// seed_flags marks rows whose label is a true annotation (as opposed to a
// pseudo-label); only those rows ever act as seeds in a join.
struct JointSpace {
  int level = 0;
  std::vector<int> covered_steps;        // sorted, contiguous
  Eigen::MatrixXd coords;
  std::vector<std::string> labels;       // "" = unlabeled
  std::vector<int> cluster_ids;          // empty or per-row
  std::vector<std::string> sample_ids;
  std::vector<char> seed_flags;

  Eigen::Index rows() const { return coords.rows(); }
  void check() const;
};

enum class JoinKind { unsupervised, semi_supervised, semi_supervised_clusters };

struct JoinOptions {
  JoinKind kind = JoinKind::semi_supervised;
  int kmeans_k = 5;
  int pseudo_label_iterations = 1;
};

// Align `left` (source) onto `right` (target, the chronologically later
// space). Output rows are the aligned left rows plus all right rows; samples
// present in both keep only the right-hand copy. Semi-supervised joins use
// the right space's seed-flagged rows as the seed set.
JointSpace join_pair(const JointSpace& left, const JointSpace& right, Eigen::Index d,
                     const JoinOptions& options, std::uint64_t rng_seed);

// Overlapping adjacent pairwise joins: level l holds #steps - l spaces, space
// i at level l covers steps i..i+l; the root covers every step.
struct AlignmentTree {
  std::vector<std::vector<JointSpace>> levels;

  const JointSpace& root() const { return levels.back().front(); }
};

// steps[i] must be a level-0 space for a single step, in chronological order.
// For cluster-augmented joins, one k-means over the union of all steps' rows
// assigns the cluster ids that the joins then carry through every level.
AlignmentTree build_tree(std::vector<JointSpace> steps, Eigen::Index d,
                         const JoinOptions& options, std::uint64_t rng_seed);

}  // namespace ssa::temporal
