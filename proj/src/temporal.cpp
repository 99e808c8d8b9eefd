#include "ssa/temporal.hpp"

#include <algorithm>
#include <exception>
#include <set>
#include <unordered_set>

#include "ssa/error.hpp"
#include "ssa/kmeans.hpp"
#include "ssa/rng.hpp"

namespace ssa::temporal {

void JointSpace::check() const {
  const auto n = static_cast<std::size_t>(rows());
  if (sample_ids.size() != n || labels.size() != n || seed_flags.size() != n)
    raise(ErrorCode::LengthMismatch, "joint space per-row fields do not match row count");
  if (!cluster_ids.empty() && cluster_ids.size() != n)
    raise(ErrorCode::LengthMismatch, "cluster_ids does not match row count");
  std::unordered_set<std::string> seen;
  for (const auto& id : sample_ids)
    if (!seen.insert(id).second)
      raise(ErrorCode::DuplicateId, "sample id '" + id + "' repeated in joint space");
}

namespace {

alignment::DomainData to_domain(const JointSpace& space) {
  alignment::DomainData d;
  d.x = space.coords;
  d.labels = space.labels;
  d.cluster_ids = space.cluster_ids;
  d.sample_ids = space.sample_ids;
  return d;
}

alignment::SeedSet seeds_from_flags(const JointSpace& space) {
  alignment::SeedSet seeds;
  for (std::size_t i = 0; i < space.seed_flags.size(); ++i) {
    if (!space.seed_flags[i]) continue;
    if (space.labels[i].empty())
      raise(ErrorCode::EmptyInput, "seed-flagged row '" + space.sample_ids[i] + "' has no label");
    seeds.entries.emplace_back(space.sample_ids[i], space.labels[i]);
  }
  return seeds;
}

}  // namespace

JointSpace join_pair(const JointSpace& left, const JointSpace& right, Eigen::Index d,
                     const JoinOptions& options, std::uint64_t rng_seed) {
  left.check();
  right.check();
  if (left.coords.cols() != right.coords.cols())
    raise(ErrorCode::FrameMismatch, "joined spaces have different column counts");

  alignment::DomainData source = to_domain(left);
  alignment::DomainData target = to_domain(right);

  Eigen::MatrixXd source_coords, target_coords;
  std::vector<std::string> source_labels, target_labels;
  if (options.kind == JoinKind::unsupervised) {
    auto pair = alignment::align_unsupervised(source, target, d);
    source_coords = std::move(pair.source_coords);
    target_coords = std::move(pair.target_coords);
    source_labels = left.labels;
    target_labels = right.labels;
  } else {
    alignment::SemiSupervisedOptions semi;
    semi.use_clusters = options.kind == JoinKind::semi_supervised_clusters;
    semi.kmeans_k = options.kmeans_k;
    semi.pseudo_label_iterations = options.pseudo_label_iterations;
    auto pair = alignment::align_semi_supervised(source, target, seeds_from_flags(right), d,
                                                 semi, rng_seed);
    source_coords = std::move(pair.source_coords);
    target_coords = std::move(pair.target_coords);
    source_labels = left.labels;
    target_labels = std::move(pair.target_labels);
  }

  // Originally annotated rows keep their labels through every join.
  for (std::size_t i = 0; i < target_labels.size(); ++i)
    if (right.seed_flags[i]) target_labels[i] = right.labels[i];

  std::unordered_set<std::string> right_ids(right.sample_ids.begin(), right.sample_ids.end());

  JointSpace out;
  out.level = std::max(left.level, right.level) + 1;
  std::set<int> steps(left.covered_steps.begin(), left.covered_steps.end());
  steps.insert(right.covered_steps.begin(), right.covered_steps.end());
  out.covered_steps.assign(steps.begin(), steps.end());

  std::vector<Eigen::Index> kept_left;
  for (std::size_t i = 0; i < left.sample_ids.size(); ++i)
    if (!right_ids.count(left.sample_ids[i])) kept_left.push_back(static_cast<Eigen::Index>(i));

  const Eigen::Index n_out = static_cast<Eigen::Index>(kept_left.size()) + right.rows();
  out.coords.resize(n_out, target_coords.cols());
  out.labels.resize(static_cast<std::size_t>(n_out));
  out.sample_ids.resize(static_cast<std::size_t>(n_out));
  out.seed_flags.resize(static_cast<std::size_t>(n_out));
  const bool carry_clusters = !left.cluster_ids.empty() && !right.cluster_ids.empty();
  if (carry_clusters) out.cluster_ids.resize(static_cast<std::size_t>(n_out));

  Eigen::Index row = 0;
  for (Eigen::Index i : kept_left) {
    out.coords.row(row) = source_coords.row(i);
    out.labels[static_cast<std::size_t>(row)] = source_labels[static_cast<std::size_t>(i)];
    out.sample_ids[static_cast<std::size_t>(row)] = left.sample_ids[static_cast<std::size_t>(i)];
    out.seed_flags[static_cast<std::size_t>(row)] = left.seed_flags[static_cast<std::size_t>(i)];
    if (carry_clusters)
      out.cluster_ids[static_cast<std::size_t>(row)] =
          left.cluster_ids[static_cast<std::size_t>(i)];
    ++row;
  }
  for (Eigen::Index i = 0; i < right.rows(); ++i) {
    out.coords.row(row) = target_coords.row(i);
    out.labels[static_cast<std::size_t>(row)] = target_labels[static_cast<std::size_t>(i)];
    out.sample_ids[static_cast<std::size_t>(row)] = right.sample_ids[static_cast<std::size_t>(i)];
    out.seed_flags[static_cast<std::size_t>(row)] = right.seed_flags[static_cast<std::size_t>(i)];
    if (carry_clusters)
      out.cluster_ids[static_cast<std::size_t>(row)] =
          right.cluster_ids[static_cast<std::size_t>(i)];
    ++row;
  }
  return out;
}

AlignmentTree build_tree(std::vector<JointSpace> steps, Eigen::Index d,
                         const JoinOptions& options, std::uint64_t rng_seed) {
  if (steps.size() < 2) raise(ErrorCode::TooFewSteps, "tree needs at least 2 steps");
  for (auto& s : steps) s.check();

  // One effective dimension for the whole tree, so spaces at every level
  // stay mutually joinable.
  Eigen::Index d_eff = d;
  for (const auto& s : steps)
    d_eff = std::min(d_eff, linalg::effective_dim(d, s.rows(), s.coords.cols()));

  // Cluster ids come from one k-means over all steps' ambient rows and ride
  // along as sample metadata; deeper levels no longer share a space.
  if (options.kind == JoinKind::semi_supervised_clusters) {
    Eigen::Index total = 0;
    for (const auto& s : steps) total += s.rows();
    Eigen::MatrixXd stacked(total, steps.front().coords.cols());
    Eigen::Index at = 0;
    for (const auto& s : steps) {
      if (s.coords.cols() != stacked.cols())
        raise(ErrorCode::FrameMismatch, "steps have different ambient dimensions");
      stacked.middleRows(at, s.rows()) = s.coords;
      at += s.rows();
    }
    auto result = kmeans::run(stacked, options.kmeans_k,
                              rng::derive({rng_seed, rng::hash_string("tree-kmeans")}));
    at = 0;
    for (auto& s : steps) {
      s.cluster_ids.assign(result.assignments.begin() + at,
                           result.assignments.begin() + at + s.rows());
      at += s.rows();
    }
  }

  AlignmentTree tree;
  tree.levels.push_back(std::move(steps));
  while (tree.levels.back().size() > 1) {
    const auto& prev = tree.levels.back();
    const auto level = static_cast<int>(tree.levels.size());
    std::vector<JointSpace> next(prev.size() - 1);
    std::vector<std::exception_ptr> failures(next.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < next.size(); ++i) {
      try {
        next[i] = join_pair(prev[i], prev[i + 1], d_eff, options,
                            rng::derive({rng_seed, static_cast<std::uint64_t>(level),
                                         static_cast<std::uint64_t>(i)}));
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
    for (const auto& f : failures)
      if (f) std::rethrow_exception(f);
    tree.levels.push_back(std::move(next));
  }
  return tree;
}

}  // namespace ssa::temporal
