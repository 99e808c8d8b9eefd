#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssa/linalg.hpp"

namespace ssa::alignment {

// One time-step's samples. Labels are per-row; an empty string means the row
// is unlabeled. cluster_ids, when non-empty, has one small integer per row.
struct DomainData {
  Eigen::MatrixXd x;                     // n x D
  std::vector<std::string> labels;       // size n or empty
  std::vector<int> cluster_ids;          // size n or empty
  std::vector<std::string> sample_ids;   // size n

  Eigen::Index rows() const { return x.rows(); }
  bool fully_labeled() const;
  void check() const;
};

// The m annotated target samples per class that drive semi-supervised
// alignment; entry order is the pseudo-labeling tie-break order.
struct SeedSet {
  std::vector<std::pair<std::string, std::string>> entries;  // (sample_id, label)
};

// (label, cluster) grouping; cluster kNoCluster when clustering is off.
inline constexpr int kNoCluster = -1;

struct GroupKey {
  std::string label;
  int cluster = kNoCluster;

  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

struct GroupAssignment {
  std::vector<GroupKey> keys;                       // group -> key
  std::vector<std::vector<Eigen::Index>> rosters;   // group -> row indices
  std::vector<Eigen::Index> per_group_dim;          // group -> effective d

  std::size_t size() const { return keys.size(); }
};

// Everything fitted for one group during semi-supervised alignment.
struct GroupTransform {
  GroupKey key;
  linalg::SubspaceBasis source_basis;
  linalg::SubspaceBasis target_basis;
  linalg::AlignmentTransform transform;
};

// Samples of two domains expressed in one shared d-dimensional frame (the
// target's global subspace).
struct AlignedPair {
  Eigen::MatrixXd source_coords;              // n_s x d
  Eigen::MatrixXd target_coords;              // n_t x d
  std::vector<std::string> source_labels;
  std::vector<std::string> target_labels;     // pseudo or given
  std::vector<char> target_seed_flags;        // per target row
  linalg::SubspaceBasis shared_basis;         // target global basis
  std::vector<GroupTransform> group_transforms;
  GroupAssignment source_groups;
  GroupAssignment target_groups;
  bool dim_clamped = false;

  Eigen::Index dim() const { return target_coords.cols(); }
};

// Global alignment of Eq.-1 form: source rows are projected onto their own
// principal components and mapped by M* = C_S^T C_T; target rows are
// projected onto theirs. d is clamped to min(d, n_s - 1, n_t - 1, D).
AlignedPair align_unsupervised(const DomainData& source, const DomainData& target,
                               Eigen::Index d);

// Provisionally label every target row from the seeds: seed rows keep their
// seed labels, other rows take the label of the nearest seed row (Euclidean,
// ties to the lowest seed entry index). iterations > 1 repeats the pass as
// 1-NN self-training against all previously labeled rows.
std::vector<std::string> pseudo_label(const DomainData& target, const SeedSet& seeds,
                                      int iterations = 1);

// Seeded k-means (k-means++ init, 300-iteration cap, empty clusters repaired
// by promoting the point farthest from its centroid) over the union of both
// domains' rows; returns per-row cluster ids for each domain.
std::pair<std::vector<int>, std::vector<int>> shared_clusters(const DomainData& source,
                                                              const DomainData& target, int k,
                                                              std::uint64_t rng_seed);

// Single-domain grouping: key = (label, cluster id or none). Groups smaller
// than max(2, d + 1) merge into the largest group sharing their label; when a
// whole class is below the threshold its per-group d shrinks (never below 1).
GroupAssignment make_groups(const std::vector<std::string>& labels,
                            const std::vector<int>& cluster_ids, Eigen::Index d);

struct SemiSupervisedOptions {
  bool use_clusters = false;
  int kmeans_k = 5;
  int pseudo_label_iterations = 1;
};

// Per-class (optionally per-cluster) alignment with pseudo-labeling and class
// centering: every source row x of group g maps to
// (x - mu_Sg) C_Sg M*_g C_Tg^T + mu_Tg in ambient space, then all mapped
// source rows and raw target rows are projected onto the single global target
// basis. The additive mu_Tg carries the class centering exactly.
AlignedPair align_semi_supervised(const DomainData& source, const DomainData& target,
                                  const SeedSet& seeds, Eigen::Index d,
                                  const SemiSupervisedOptions& options, std::uint64_t rng_seed);

}  // namespace ssa::alignment
