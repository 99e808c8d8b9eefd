#include "ssa/alignment.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "ssa/error.hpp"
#include "ssa/kernels.hpp"
#include "ssa/kmeans.hpp"
#include "ssa/rng.hpp"

namespace ssa::alignment {

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

std::unordered_map<std::string, Eigen::Index> index_by_id(const DomainData& domain) {
  std::unordered_map<std::string, Eigen::Index> idx;
  idx.reserve(domain.sample_ids.size());
  for (std::size_t i = 0; i < domain.sample_ids.size(); ++i) {
    if (!idx.emplace(domain.sample_ids[i], static_cast<Eigen::Index>(i)).second)
      raise(ErrorCode::DuplicateId, "duplicate sample id '" + domain.sample_ids[i] + "'");
  }
  return idx;
}

}  // namespace

bool DomainData::fully_labeled() const {
  if (labels.size() != static_cast<std::size_t>(rows())) return false;
  for (const auto& l : labels)
    if (l.empty()) return false;
  return true;
}

void DomainData::check() const {
  const auto n = static_cast<std::size_t>(rows());
  if (sample_ids.size() != n)
    raise(ErrorCode::LengthMismatch, "sample_ids does not match row count");
  if (!labels.empty() && labels.size() != n)
    raise(ErrorCode::LengthMismatch, "labels does not match row count");
  if (!cluster_ids.empty() && cluster_ids.size() != n)
    raise(ErrorCode::LengthMismatch, "cluster_ids does not match row count");
}

AlignedPair align_unsupervised(const DomainData& source, const DomainData& target,
                               Eigen::Index d) {
  source.check();
  target.check();
  if (d < 1) raise(ErrorCode::InvalidConfig, "subspace dimension must be positive");
  if (source.rows() < 2 || target.rows() < 2)
    raise(ErrorCode::DegenerateInput, "both domains need at least 2 samples");
  if (source.x.cols() != target.x.cols())
    raise(ErrorCode::DimensionMismatch, "domains have different ambient dimensions");

  Eigen::Index d_eff = std::min(linalg::effective_dim(d, source.rows(), source.x.cols()),
                                linalg::effective_dim(d, target.rows(), target.x.cols()));

  AlignedPair pair;
  pair.dim_clamped = d_eff < d;
  linalg::SubspaceBasis c_s = linalg::fit_pca(source.x, d_eff);
  pair.shared_basis = linalg::fit_pca(target.x, d_eff);
  linalg::AlignmentTransform m = linalg::solve_alignment(c_s, pair.shared_basis);

  pair.source_coords = kernels::matmul(linalg::project(c_s, source.x), m.m);
  pair.target_coords = linalg::project(pair.shared_basis, target.x);
  pair.source_labels = source.labels;
  pair.target_labels = target.labels;
  pair.target_seed_flags.assign(static_cast<std::size_t>(target.rows()), 0);
  return pair;
}

std::vector<std::string> pseudo_label(const DomainData& target, const SeedSet& seeds,
                                      int iterations) {
  target.check();
  if (seeds.entries.empty()) raise(ErrorCode::EmptyInput, "seed set is empty");
  if (iterations < 1) raise(ErrorCode::InvalidConfig, "iterations must be >= 1");

  auto idx = index_by_id(target);
  const auto n = static_cast<std::size_t>(target.rows());

  std::vector<Eigen::Index> seed_rows;
  seed_rows.reserve(seeds.entries.size());
  std::unordered_set<std::string> seen;
  for (const auto& [id, label] : seeds.entries) {
    auto it = idx.find(id);
    if (it == idx.end()) raise(ErrorCode::UnknownSeedId, "seed id '" + id + "' not in target");
    if (!seen.insert(id).second) raise(ErrorCode::DuplicateId, "seed id '" + id + "' repeated");
    seed_rows.push_back(it->second);
  }

  std::vector<char> is_seed(n, 0);
  std::vector<std::string> labels(n);
  for (std::size_t e = 0; e < seeds.entries.size(); ++e) {
    is_seed[static_cast<std::size_t>(seed_rows[e])] = 1;
    labels[static_cast<std::size_t>(seed_rows[e])] = seeds.entries[e].second;
  }

  // First pass: nearest seed row, ties to the lowest seed entry index.
  Eigen::MatrixXd seed_matrix = gather_rows(target.x, seed_rows);
  Eigen::MatrixXd d2 = kernels::pairwise_sqdist(target.x, seed_matrix);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_seed[i]) continue;
    Eigen::Index best = 0;
    double best_d = d2(static_cast<Eigen::Index>(i), 0);
    for (std::size_t e = 1; e < seeds.entries.size(); ++e) {
      double de = d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e));
      if (de < best_d) {
        best_d = de;
        best = static_cast<Eigen::Index>(e);
      }
    }
    labels[i] = seeds.entries[static_cast<std::size_t>(best)].second;
  }

  // Optional self-training passes: 1-NN against all other rows under the
  // previous pass's labels; seeds never move.
  if (iterations > 1 && n > 1) {
    Eigen::MatrixXd all_d2 = kernels::pairwise_sqdist(target.x, target.x);
    for (int it = 1; it < iterations; ++it) {
      std::vector<std::string> prev = labels;
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (is_seed[i]) continue;
        Eigen::Index best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          double dj = all_d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          if (dj < best_d) {
            best_d = dj;
            best = static_cast<Eigen::Index>(j);
          }
        }
        labels[i] = prev[static_cast<std::size_t>(best)];
        changed = changed || labels[i] != prev[i];
      }
      if (!changed) break;
    }
  }
  return labels;
}

std::pair<std::vector<int>, std::vector<int>> shared_clusters(const DomainData& source,
                                                              const DomainData& target, int k,
                                                              std::uint64_t rng_seed) {
  source.check();
  target.check();
  if (source.x.cols() != target.x.cols())
    raise(ErrorCode::DimensionMismatch, "domains have different ambient dimensions");
  Eigen::MatrixXd stacked(source.rows() + target.rows(), source.x.cols());
  stacked.topRows(source.rows()) = source.x;
  stacked.bottomRows(target.rows()) = target.x;
  auto result = kmeans::run(stacked, k, rng_seed);
  std::vector<int> src_ids(result.assignments.begin(),
                           result.assignments.begin() + source.rows());
  std::vector<int> tgt_ids(result.assignments.begin() + source.rows(), result.assignments.end());
  return {std::move(src_ids), std::move(tgt_ids)};
}

namespace {

struct LabelGroups {
  std::vector<GroupKey> keys;
  std::vector<std::vector<Eigen::Index>> rosters;
};

// Merge groups below `threshold` into the largest group of the same label
// (size ties to the lowest cluster id). Group list must be non-empty.
void merge_small(LabelGroups& g, std::size_t threshold) {
  while (g.keys.size() > 1) {
    std::size_t smallest = 0;
    for (std::size_t i = 1; i < g.keys.size(); ++i)
      if (g.rosters[i].size() < g.rosters[smallest].size()) smallest = i;
    if (g.rosters[smallest].size() >= threshold) break;
    std::size_t largest = smallest == 0 ? 1 : 0;
    for (std::size_t i = 0; i < g.keys.size(); ++i) {
      if (i == smallest) continue;
      if (g.rosters[i].size() > g.rosters[largest].size()) largest = i;
    }
    auto& dst = g.rosters[largest];
    dst.insert(dst.end(), g.rosters[smallest].begin(), g.rosters[smallest].end());
    std::sort(dst.begin(), dst.end());
    g.keys.erase(g.keys.begin() + static_cast<std::ptrdiff_t>(smallest));
    g.rosters.erase(g.rosters.begin() + static_cast<std::ptrdiff_t>(smallest));
  }
}

}  // namespace

GroupAssignment make_groups(const std::vector<std::string>& labels,
                            const std::vector<int>& cluster_ids, Eigen::Index d) {
  if (labels.empty()) raise(ErrorCode::EmptyInput, "no rows to group");
  if (!cluster_ids.empty() && cluster_ids.size() != labels.size())
    raise(ErrorCode::LengthMismatch, "cluster_ids does not match labels");
  for (const auto& l : labels)
    if (l.empty()) raise(ErrorCode::EmptyInput, "every row needs a label");

  std::map<std::string, std::map<int, std::vector<Eigen::Index>>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int cluster = cluster_ids.empty() ? kNoCluster : cluster_ids[i];
    by_label[labels[i]][cluster].push_back(static_cast<Eigen::Index>(i));
  }

  GroupAssignment out;
  for (auto& [label, clusters] : by_label) {
    std::size_t class_total = 0;
    for (const auto& [cid, rows] : clusters) class_total += rows.size();
    const Eigen::Index d_class =
        std::max<Eigen::Index>(1, std::min<Eigen::Index>(d, static_cast<Eigen::Index>(class_total) - 1));
    const auto threshold = static_cast<std::size_t>(std::max<Eigen::Index>(2, d_class + 1));

    LabelGroups g;
    for (auto& [cid, rows] : clusters) {
      g.keys.push_back(GroupKey{label, cid});
      g.rosters.push_back(std::move(rows));
    }
    merge_small(g, threshold);

    for (std::size_t i = 0; i < g.keys.size(); ++i) {
      out.keys.push_back(g.keys[i]);
      out.rosters.push_back(std::move(g.rosters[i]));
      out.per_group_dim.push_back(d_class);
    }
  }
  return out;
}

namespace {

struct JointGroup {
  GroupKey key;
  std::vector<Eigen::Index> source_rows;
  std::vector<Eigen::Index> target_rows;
  Eigen::Index dim = 1;
};

// Grouping with keys matched across both domains: a (label, cluster) key is
// kept only when both domains clear the size threshold; the rest merge into
// the label's largest kept key, or collapse to (label, none).
std::vector<JointGroup> matched_groups(const std::vector<std::string>& source_labels,
                                       const std::vector<std::string>& target_labels,
                                       const std::vector<int>& source_clusters,
                                       const std::vector<int>& target_clusters, Eigen::Index d) {
  std::set<std::string> label_set(source_labels.begin(), source_labels.end());

  std::vector<JointGroup> out;
  for (const auto& label : label_set) {
    std::map<int, std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>> by_cluster;
    std::size_t src_total = 0, tgt_total = 0;
    for (std::size_t i = 0; i < source_labels.size(); ++i) {
      if (source_labels[i] != label) continue;
      int cid = source_clusters.empty() ? kNoCluster : source_clusters[i];
      by_cluster[cid].first.push_back(static_cast<Eigen::Index>(i));
      ++src_total;
    }
    for (std::size_t i = 0; i < target_labels.size(); ++i) {
      if (target_labels[i] != label) continue;
      int cid = target_clusters.empty() ? kNoCluster : target_clusters[i];
      by_cluster[cid].second.push_back(static_cast<Eigen::Index>(i));
      ++tgt_total;
    }

    if (src_total < 2 || tgt_total < 2)
      raise(ErrorCode::DegenerateInput,
            "class '" + label + "' needs at least 2 rows on each side");

    const Eigen::Index d_class = std::max<Eigen::Index>(
        1, std::min<Eigen::Index>(
               d, static_cast<Eigen::Index>(std::min(src_total, tgt_total)) - 1));
    const auto threshold = static_cast<std::size_t>(std::max<Eigen::Index>(2, d_class + 1));

    std::vector<JointGroup> kept;
    std::vector<std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>> leftovers;
    for (auto& [cid, rows] : by_cluster) {
      if (rows.first.size() >= threshold && rows.second.size() >= threshold) {
        kept.push_back(JointGroup{GroupKey{label, cid}, std::move(rows.first),
                                  std::move(rows.second), d_class});
      } else {
        leftovers.push_back(std::move(rows));
      }
    }

    if (kept.empty()) {
      JointGroup whole{GroupKey{label, kNoCluster}, {}, {}, d_class};
      for (auto& [src, tgt] : leftovers) {
        whole.source_rows.insert(whole.source_rows.end(), src.begin(), src.end());
        whole.target_rows.insert(whole.target_rows.end(), tgt.begin(), tgt.end());
      }
      std::sort(whole.source_rows.begin(), whole.source_rows.end());
      std::sort(whole.target_rows.begin(), whole.target_rows.end());
      out.push_back(std::move(whole));
    } else {
      if (!leftovers.empty()) {
        std::size_t largest = 0;
        for (std::size_t i = 1; i < kept.size(); ++i) {
          std::size_t a = std::min(kept[i].source_rows.size(), kept[i].target_rows.size());
          std::size_t b = std::min(kept[largest].source_rows.size(),
                                   kept[largest].target_rows.size());
          if (a > b) largest = i;
        }
        auto& dst = kept[largest];
        for (auto& [src, tgt] : leftovers) {
          dst.source_rows.insert(dst.source_rows.end(), src.begin(), src.end());
          dst.target_rows.insert(dst.target_rows.end(), tgt.begin(), tgt.end());
        }
        std::sort(dst.source_rows.begin(), dst.source_rows.end());
        std::sort(dst.target_rows.begin(), dst.target_rows.end());
      }
      for (auto& g : kept) out.push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace

AlignedPair align_semi_supervised(const DomainData& source, const DomainData& target,
                                  const SeedSet& seeds, Eigen::Index d,
                                  const SemiSupervisedOptions& options, std::uint64_t rng_seed) {
  source.check();
  target.check();
  if (d < 1) raise(ErrorCode::InvalidConfig, "subspace dimension must be positive");
  if (!source.fully_labeled())
    raise(ErrorCode::EmptyInput, "semi-supervised alignment needs a fully labeled source");
  if (source.rows() < 2 || target.rows() < 2)
    raise(ErrorCode::DegenerateInput, "both domains need at least 2 samples");
  if (source.x.cols() != target.x.cols())
    raise(ErrorCode::DimensionMismatch, "domains have different ambient dimensions");

  std::set<std::string> seed_classes;
  for (const auto& [id, label] : seeds.entries) seed_classes.insert(label);
  for (const auto& label : source.labels)
    if (!seed_classes.count(label))
      raise(ErrorCode::MissingSeedClass, "source class '" + label + "' has no target seed");

  std::vector<std::string> pseudo =
      pseudo_label(target, seeds, options.pseudo_label_iterations);

  std::vector<int> src_clusters, tgt_clusters;
  if (options.use_clusters) {
    if (!source.cluster_ids.empty() && !target.cluster_ids.empty()) {
      src_clusters = source.cluster_ids;
      tgt_clusters = target.cluster_ids;
    } else {
      std::tie(src_clusters, tgt_clusters) = shared_clusters(
          source, target, options.kmeans_k, rng::derive({rng_seed, rng::hash_string("kmeans")}));
    }
  }

  auto groups = matched_groups(source.labels, pseudo, src_clusters, tgt_clusters, d);

  AlignedPair pair;
  const Eigen::Index d_eff = linalg::effective_dim(d, target.rows(), target.x.cols());
  pair.dim_clamped = d_eff < d;
  pair.shared_basis = linalg::fit_pca(target.x, d_eff);

  // Per-group alignment and ambient composition. Groups are independent; the
  // scatter targets disjoint rows, so the loop may run in parallel.
  Eigen::MatrixXd mapped(source.rows(), source.x.cols());
  pair.group_transforms.resize(groups.size());
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t g = 0; g < groups.size(); ++g) {
    try {
      const auto& group = groups[g];
      Eigen::MatrixXd src_rows = gather_rows(source.x, group.source_rows);
      Eigen::MatrixXd tgt_rows = gather_rows(target.x, group.target_rows);
      linalg::SubspaceBasis c_sg = linalg::fit_pca(src_rows, group.dim);
      linalg::SubspaceBasis c_tg = linalg::fit_pca(tgt_rows, group.dim);
      linalg::AlignmentTransform m_g = linalg::solve_alignment(c_sg, c_tg);
      Eigen::MatrixXd coords = kernels::matmul(linalg::project(c_sg, src_rows), m_g.m);
      Eigen::MatrixXd ambient = linalg::reconstruct(c_tg, coords);
      for (std::size_t i = 0; i < group.source_rows.size(); ++i)
        mapped.row(group.source_rows[i]) = ambient.row(static_cast<Eigen::Index>(i));
      pair.group_transforms[g] =
          GroupTransform{group.key, std::move(c_sg), std::move(c_tg), std::move(m_g)};
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  pair.source_coords = linalg::project(pair.shared_basis, mapped);
  pair.target_coords = linalg::project(pair.shared_basis, target.x);
  pair.source_labels = source.labels;
  pair.target_labels = std::move(pseudo);

  pair.target_seed_flags.assign(static_cast<std::size_t>(target.rows()), 0);
  auto idx = index_by_id(target);
  for (const auto& [id, label] : seeds.entries)
    pair.target_seed_flags[static_cast<std::size_t>(idx.at(id))] = 1;

  for (const auto& group : groups) {
    pair.source_groups.keys.push_back(group.key);
    pair.source_groups.rosters.push_back(group.source_rows);
    pair.source_groups.per_group_dim.push_back(group.dim);
    pair.target_groups.keys.push_back(group.key);
    pair.target_groups.rosters.push_back(group.target_rows);
    pair.target_groups.per_group_dim.push_back(group.dim);
  }
  return pair;
}

}  // namespace ssa::alignment
