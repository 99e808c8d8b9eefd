#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssa/alignment.hpp"
#include "ssa/classify.hpp"
#include "ssa/data.hpp"

namespace ssa::eval {

// The eight training regimes of the report columns, in column order.
enum class Mode {
  all,
  same,
  prev,
  unsup,
  semi,
  unsup_unb,
  semi_unb,
  semi_unb_clst,
};

inline constexpr int kModeCount = 8;
const char* mode_name(Mode m);
Mode parse_mode(const std::string& s);
std::vector<Mode> all_modes();

enum class ClassifierKind { knn, centroid, svm, mlp };

const char* classifier_name(ClassifierKind c);
ClassifierKind parse_classifier(const std::string& s);

struct RunConfig {
  Eigen::Index dim = 100;
  int seeds_per_class = 10;
  int kmeans_k = 5;
  ClassifierKind classifier = ClassifierKind::svm;
  classify::SvmRbfConfig svm;
  classify::MlpConfig mlp;
  int knn_k = 1;
  std::vector<Mode> modes = all_modes();
  std::uint64_t rng_seed = 0;
  bool oversample = false;
  bool all_includes_future = true;
  int pseudo_label_iterations = 1;
  int sweep_repetitions = 5;
};

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::map<std::string, double> per_class_f1;
};

// accuracy = exact-match fraction; per-class F1 with 0/0 := 0; macro-F1 is
// the unweighted mean over the labels present in the truth.
Metrics metrics(const std::vector<std::string>& predictions,
                const std::vector<std::string>& truth);

// min(m, class size) labeled rows per inventory class from the test step's
// train split, chosen by seeded uniform draw without replacement.
alignment::SeedSet select_seeds(const data::Corpus& corpus, int test_step, int m,
                                std::uint64_t rng_seed);

struct MetricCell {
  Metrics scores;
  std::map<std::string, int> support;  // truth label -> count in the eval set
  int n_train = 0;
  int n_eval = 0;
  std::vector<std::string> eval_ids;
  bool dim_clamped = false;
};

// One (test step, mode) cell: train per the mode's regime, evaluate on the
// test step's test split minus seed rows.
MetricCell run_mode(const data::Corpus& corpus, int test_step, Mode mode,
                    const RunConfig& config);

struct Report {
  std::vector<int> test_steps;  // chronological, from the second step onward
  std::map<Mode, std::map<int, MetricCell>> cells;
  std::map<Mode, Metrics> averages;  // unweighted over test steps
  RunConfig config;
  std::uint64_t corpus_digest = 0;
};

Report run_protocol(const data::Corpus& corpus, const RunConfig& config);

struct SweepPoint {
  int seeds_per_class = 0;
  double accuracy_mean = 0.0, accuracy_lo = 0.0, accuracy_hi = 0.0;
  double macro_f1_mean = 0.0, macro_f1_lo = 0.0, macro_f1_hi = 0.0;
};

// Semi mode across the m grid, repeated with derived seeds; the lo/hi bounds
// are a 95% normal-approximation interval over the repetitions.
std::vector<SweepPoint> sweep_seeds(const data::Corpus& corpus, const RunConfig& config,
                                    const std::vector<int>& m_grid);

enum class MetricKind { accuracy, macro_f1 };

// CSV with header `test_step,all,same,prev,unsup,semi,unsup_unb,semi_unb,
// semi_unb_clst`; one row per test step (manifest display name) plus an avg
// row. Cells for modes that were not run stay empty.
std::string report_csv(const data::Corpus& corpus, const Report& report, MetricKind kind);

// Full per-class breakdown plus the provenance block (config, seed, digest).
std::string report_json(const data::Corpus& corpus, const Report& report);

std::string sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace ssa::eval
