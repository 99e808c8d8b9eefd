#include "ssa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "ssa/error.hpp"
#include "ssa/rng.hpp"
#include "ssa/temporal.hpp"

namespace ssa::eval {

namespace {

const char* kModeNames[kModeCount] = {"all",   "same",      "prev",     "unsup",
                                      "semi",  "unsup_unb", "semi_unb", "semi_unb_clst"};

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::uint64_t purpose_seed(const RunConfig& config, int step, const char* purpose) {
  return rng::derive({config.rng_seed, static_cast<std::uint64_t>(step),
                      rng::hash_string(purpose)});
}

}  // namespace

const char* mode_name(Mode m) { return kModeNames[static_cast<int>(m)]; }

Mode parse_mode(const std::string& s) {
  for (int i = 0; i < kModeCount; ++i)
    if (s == kModeNames[i]) return static_cast<Mode>(i);
  raise(ErrorCode::InvalidConfig, "unknown mode '" + s + "'");
}

std::vector<Mode> all_modes() {
  std::vector<Mode> modes;
  for (int i = 0; i < kModeCount; ++i) modes.push_back(static_cast<Mode>(i));
  return modes;
}

const char* classifier_name(ClassifierKind c) {
  switch (c) {
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::centroid: return "centroid";
    case ClassifierKind::svm: return "svm";
    case ClassifierKind::mlp: return "mlp";
  }
  return "svm";
}

ClassifierKind parse_classifier(const std::string& s) {
  if (s == "knn") return ClassifierKind::knn;
  if (s == "centroid") return ClassifierKind::centroid;
  if (s == "svm") return ClassifierKind::svm;
  if (s == "mlp") return ClassifierKind::mlp;
  raise(ErrorCode::InvalidConfig, "unknown classifier '" + s + "'");
}

Metrics metrics(const std::vector<std::string>& predictions,
                const std::vector<std::string>& truth) {
  if (predictions.size() != truth.size() || truth.empty())
    raise(ErrorCode::LengthMismatch, "predictions and truth must have equal non-zero length");

  Metrics out;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (predictions[i] == truth[i]) ++correct;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  std::set<std::string> classes(truth.begin(), truth.end());
  double f1_sum = 0.0;
  for (const auto& c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      bool is_true = truth[i] == c, is_pred = predictions[i] == c;
      if (is_true && is_pred) ++tp;
      if (!is_true && is_pred) ++fp;
      if (is_true && !is_pred) ++fn;
    }
    double denom = 2.0 * tp + fp + fn;
    double f1 = denom > 0.0 ? 2.0 * tp / denom : 0.0;  // 0/0 := 0
    out.per_class_f1[c] = f1;
    f1_sum += f1;
  }
  out.macro_f1 = f1_sum / static_cast<double>(classes.size());
  return out;
}

alignment::SeedSet select_seeds(const data::Corpus& corpus, int test_step, int m,
                                std::uint64_t rng_seed) {
  if (m < 1) raise(ErrorCode::InvalidConfig, "seeds per class must be >= 1");
  std::map<std::string, std::vector<std::size_t>> per_class;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const auto& rec = corpus.records[i];
    if (rec.step == test_step && rec.split == data::Split::train && !rec.label.empty())
      per_class[rec.label].push_back(i);
  }

  alignment::SeedSet seeds;
  for (const auto& label : corpus.manifest.labels) {
    auto it = per_class.find(label);
    if (it == per_class.end())
      raise(ErrorCode::MissingClass, "class '" + label + "' has no labeled train row in step " +
                                         std::to_string(test_step));
    std::vector<std::size_t> rows = it->second;
    rng::Rng rng(rng::derive({rng_seed, rng::hash_string(label)}));
    rng.shuffle(rows);
    rows.resize(std::min<std::size_t>(rows.size(), static_cast<std::size_t>(m)));
    std::sort(rows.begin(), rows.end());
    for (std::size_t r : rows) seeds.entries.emplace_back(corpus.records[r].id, label);
  }
  return seeds;
}

namespace {

struct StepIndex {
  std::vector<int> steps;  // sorted
  std::map<int, std::vector<std::size_t>> rows;  // step -> record indices
};

StepIndex index_steps(const data::Corpus& corpus) {
  StepIndex idx;
  idx.steps = corpus.step_indices();
  for (std::size_t i = 0; i < corpus.records.size(); ++i)
    idx.rows[corpus.records[i].step].push_back(i);
  return idx;
}

// Level-0 space of one history step: its labeled train rows, all flagged as
// true annotations.
temporal::JointSpace history_space(const data::Corpus& corpus,
                                   const std::vector<std::size_t>& rows, int step) {
  std::vector<std::size_t> keep;
  for (std::size_t r : rows) {
    const auto& rec = corpus.records[r];
    if (rec.split == data::Split::train && !rec.label.empty()) keep.push_back(r);
  }
  temporal::JointSpace space;
  space.level = 0;
  space.covered_steps = {step};
  space.coords.resize(static_cast<Eigen::Index>(keep.size()), corpus.manifest.dimension);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto& rec = corpus.records[keep[i]];
    space.coords.row(static_cast<Eigen::Index>(i)) = rec.vector;
    space.labels.push_back(rec.label);
    space.sample_ids.push_back(rec.id);
    space.seed_flags.push_back(1);
  }
  return space;
}

// Level-0 space of the test step: every row, labels visible only on seeds.
temporal::JointSpace test_space(const data::Corpus& corpus,
                                const std::vector<std::size_t>& rows, int step,
                                const std::unordered_map<std::string, std::string>& seed_labels) {
  temporal::JointSpace space;
  space.level = 0;
  space.covered_steps = {step};
  space.coords.resize(static_cast<Eigen::Index>(rows.size()), corpus.manifest.dimension);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& rec = corpus.records[rows[i]];
    space.coords.row(static_cast<Eigen::Index>(i)) = rec.vector;
    auto it = seed_labels.find(rec.id);
    space.labels.push_back(it == seed_labels.end() ? std::string() : it->second);
    space.sample_ids.push_back(rec.id);
    space.seed_flags.push_back(it == seed_labels.end() ? 0 : 1);
  }
  return space;
}

classify::ClassifierModel fit_classifier(const RunConfig& config,
                                         const classify::LabeledSet& train,
                                         std::uint64_t rng_seed) {
  switch (config.classifier) {
    case ClassifierKind::knn: return classify::fit_knn(train, config.knn_k);
    case ClassifierKind::centroid: return classify::fit_centroid(train);
    case ClassifierKind::svm: return classify::fit_svm_rbf(train, config.svm, rng_seed);
    case ClassifierKind::mlp: return classify::fit_mlp(train, config.mlp, rng_seed);
  }
  raise(ErrorCode::InvalidConfig, "unknown classifier");
}

bool is_aligned_mode(Mode mode) {
  return mode == Mode::unsup || mode == Mode::semi || mode == Mode::unsup_unb ||
         mode == Mode::semi_unb || mode == Mode::semi_unb_clst;
}

bool is_semi_mode(Mode mode) {
  return mode == Mode::semi || mode == Mode::semi_unb || mode == Mode::semi_unb_clst;
}

}  // namespace

MetricCell run_mode(const data::Corpus& corpus, int test_step, Mode mode,
                    const RunConfig& config) {
  corpus.validate();
  StepIndex idx = index_steps(corpus);
  auto pos_it = std::find(idx.steps.begin(), idx.steps.end(), test_step);
  if (pos_it == idx.steps.end())
    raise(ErrorCode::UnknownStep, "test step " + std::to_string(test_step) + " not in manifest");
  const auto pos = static_cast<std::size_t>(pos_it - idx.steps.begin());
  if (mode != Mode::all && mode != Mode::same && pos == 0)
    raise(ErrorCode::NoHistory, "mode needs at least one preceding step");

  alignment::SeedSet seeds =
      select_seeds(corpus, test_step, config.seeds_per_class,
                   purpose_seed(config, test_step, "seeds"));
  std::unordered_map<std::string, std::string> seed_labels;
  for (const auto& [id, label] : seeds.entries) seed_labels.emplace(id, label);

  // Evaluation set: the test step's labeled test-split rows, minus seeds.
  std::vector<std::size_t> eval_rows;
  for (std::size_t r : idx.rows.at(test_step)) {
    const auto& rec = corpus.records[r];
    if (rec.split == data::Split::test && !rec.label.empty() && !seed_labels.count(rec.id))
      eval_rows.push_back(r);
  }
  if (eval_rows.empty())
    raise(ErrorCode::EmptyInput, "no evaluation rows in step " + std::to_string(test_step));

  classify::LabeledSet train;
  Eigen::MatrixXd eval_coords;
  MetricCell cell;

  if (!is_aligned_mode(mode)) {
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
      const auto& rec = corpus.records[i];
      if (rec.split != data::Split::train || rec.label.empty()) continue;
      bool in = false;
      switch (mode) {
        case Mode::all:
          in = config.all_includes_future || rec.step <= test_step;
          break;
        case Mode::same:
          in = rec.step == test_step;
          break;
        case Mode::prev:
          in = rec.step == idx.steps[pos - 1];
          break;
        default:
          break;
      }
      if (in) train_rows.push_back(i);
    }
    if (train_rows.empty()) raise(ErrorCode::EmptyInput, "empty training set");
    train.coords.resize(static_cast<Eigen::Index>(train_rows.size()), corpus.manifest.dimension);
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      train.coords.row(static_cast<Eigen::Index>(i)) = corpus.records[train_rows[i]].vector;
      train.labels.push_back(corpus.records[train_rows[i]].label);
    }
    eval_coords.resize(static_cast<Eigen::Index>(eval_rows.size()), corpus.manifest.dimension);
    for (std::size_t i = 0; i < eval_rows.size(); ++i)
      eval_coords.row(static_cast<Eigen::Index>(i)) = corpus.records[eval_rows[i]].vector;
  } else {
    // Pair modes align the previous step only; unbounded modes run the tree
    // over every preceding step. Both go through the same join machinery, so
    // with a single history step the unbounded cells collapse bitwise onto
    // the pair cells.
    std::vector<temporal::JointSpace> spaces;
    const bool unbounded =
        mode == Mode::unsup_unb || mode == Mode::semi_unb || mode == Mode::semi_unb_clst;
    std::unordered_set<std::string> history_train_ids;
    for (std::size_t s = unbounded ? 0 : pos - 1; s < pos; ++s) {
      spaces.push_back(history_space(corpus, idx.rows.at(idx.steps[s]), idx.steps[s]));
      for (const auto& id : spaces.back().sample_ids) history_train_ids.insert(id);
    }
    spaces.push_back(test_space(corpus, idx.rows.at(test_step), test_step, seed_labels));

    temporal::JoinOptions join;
    join.kind = mode == Mode::unsup || mode == Mode::unsup_unb
                    ? temporal::JoinKind::unsupervised
                    : (mode == Mode::semi_unb_clst ? temporal::JoinKind::semi_supervised_clusters
                                                   : temporal::JoinKind::semi_supervised);
    join.kmeans_k = config.kmeans_k;
    join.pseudo_label_iterations = config.pseudo_label_iterations;

    temporal::AlignmentTree tree = temporal::build_tree(
        std::move(spaces), config.dim, join, purpose_seed(config, test_step, "align"));
    const temporal::JointSpace& root = tree.root();
    cell.dim_clamped = root.coords.cols() < config.dim;

    std::unordered_map<std::string, Eigen::Index> root_rows;
    for (std::size_t i = 0; i < root.sample_ids.size(); ++i)
      root_rows.emplace(root.sample_ids[i], static_cast<Eigen::Index>(i));

    std::vector<std::pair<Eigen::Index, std::string>> train_pairs;
    for (std::size_t i = 0; i < root.sample_ids.size(); ++i)
      if (history_train_ids.count(root.sample_ids[i]))
        train_pairs.emplace_back(static_cast<Eigen::Index>(i),
                                 root.labels[i]);
    if (is_semi_mode(mode))
      for (const auto& [id, label] : seeds.entries)
        train_pairs.emplace_back(root_rows.at(id), label);

    train.coords.resize(static_cast<Eigen::Index>(train_pairs.size()), root.coords.cols());
    for (std::size_t i = 0; i < train_pairs.size(); ++i) {
      train.coords.row(static_cast<Eigen::Index>(i)) = root.coords.row(train_pairs[i].first);
      train.labels.push_back(train_pairs[i].second);
    }

    eval_coords.resize(static_cast<Eigen::Index>(eval_rows.size()), root.coords.cols());
    for (std::size_t i = 0; i < eval_rows.size(); ++i)
      eval_coords.row(static_cast<Eigen::Index>(i)) =
          root.coords.row(root_rows.at(corpus.records[eval_rows[i]].id));
  }

  if (config.oversample)
    train = classify::oversample(train, purpose_seed(config, test_step, "oversample"));

  classify::ClassifierModel model =
      fit_classifier(config, train, purpose_seed(config, test_step, "classifier"));
  std::vector<std::string> predictions = classify::predict(model, eval_coords);

  std::vector<std::string> truth;
  for (std::size_t r : eval_rows) {
    truth.push_back(corpus.records[r].label);
    cell.eval_ids.push_back(corpus.records[r].id);
    ++cell.support[corpus.records[r].label];
  }
  cell.scores = metrics(predictions, truth);
  cell.n_train = static_cast<int>(train.labels.size());
  cell.n_eval = static_cast<int>(eval_rows.size());
  return cell;
}

Report run_protocol(const data::Corpus& corpus, const RunConfig& config) {
  corpus.validate();
  auto steps = corpus.step_indices();
  if (steps.size() < 2) raise(ErrorCode::TooFewSteps, "protocol needs at least 2 steps");

  Report report;
  report.config = config;
  report.corpus_digest = data::corpus_digest(corpus);
  report.test_steps.assign(steps.begin() + 1, steps.end());

  struct Job {
    int step;
    Mode mode;
  };
  std::vector<Job> jobs;
  for (int step : report.test_steps)
    for (Mode mode : config.modes) jobs.push_back({step, mode});

  std::vector<MetricCell> results(jobs.size());
  std::vector<std::exception_ptr> failures(jobs.size());
  // Cells are independent; per-cell seeds derive from (rng_seed, step,
  // purpose), so results do not depend on the schedule.
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      results[i] = run_mode(corpus, jobs[i].step, jobs[i].mode, config);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  for (std::size_t i = 0; i < jobs.size(); ++i)
    report.cells[jobs[i].mode][jobs[i].step] = std::move(results[i]);

  for (Mode mode : config.modes) {
    Metrics avg;
    std::map<std::string, std::pair<double, int>> f1_acc;
    const auto& per_step = report.cells.at(mode);
    for (const auto& [step, cell] : per_step) {
      avg.accuracy += cell.scores.accuracy;
      avg.macro_f1 += cell.scores.macro_f1;
      for (const auto& [label, f1] : cell.scores.per_class_f1) {
        f1_acc[label].first += f1;
        f1_acc[label].second += 1;
      }
    }
    const auto n = static_cast<double>(per_step.size());
    avg.accuracy /= n;
    avg.macro_f1 /= n;
    for (const auto& [label, acc] : f1_acc)
      avg.per_class_f1[label] = acc.first / static_cast<double>(acc.second);
    report.averages[mode] = avg;
  }
  return report;
}

std::vector<SweepPoint> sweep_seeds(const data::Corpus& corpus, const RunConfig& config,
                                    const std::vector<int>& m_grid) {
  if (m_grid.empty()) raise(ErrorCode::InvalidConfig, "empty m grid");
  if (config.sweep_repetitions < 1)
    raise(ErrorCode::InvalidConfig, "sweep repetitions must be >= 1");

  std::vector<SweepPoint> points;
  for (int m : m_grid) {
    std::vector<double> accs, f1s;
    for (int r = 0; r < config.sweep_repetitions; ++r) {
      RunConfig rep = config;
      rep.seeds_per_class = m;
      rep.modes = {Mode::semi};
      rep.rng_seed = rng::derive({config.rng_seed, rng::hash_string("sweep"),
                                  static_cast<std::uint64_t>(r)});
      Report report = run_protocol(corpus, rep);
      accs.push_back(report.averages.at(Mode::semi).accuracy);
      f1s.push_back(report.averages.at(Mode::semi).macro_f1);
    }
    auto summarize = [&](const std::vector<double>& xs, double& mean, double& lo, double& hi) {
      mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
      double half = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
      lo = mean - half;
      hi = mean + half;
    };
    SweepPoint p;
    p.seeds_per_class = m;
    summarize(accs, p.accuracy_mean, p.accuracy_lo, p.accuracy_hi);
    summarize(f1s, p.macro_f1_mean, p.macro_f1_lo, p.macro_f1_hi);
    points.push_back(p);
  }
  return points;
}

std::string report_csv(const data::Corpus& corpus, const Report& report, MetricKind kind) {
  std::string out = "test_step";
  for (int i = 0; i < kModeCount; ++i) out += std::string(",") + kModeNames[i];
  out += '\n';

  auto cell_value = [&](const Metrics& m) {
    return kind == MetricKind::accuracy ? m.accuracy : m.macro_f1;
  };
  for (int step : report.test_steps) {
    out += corpus.manifest.steps.at(step);
    for (int i = 0; i < kModeCount; ++i) {
      out += ',';
      auto mode_it = report.cells.find(static_cast<Mode>(i));
      if (mode_it == report.cells.end()) continue;
      auto cell_it = mode_it->second.find(step);
      if (cell_it == mode_it->second.end()) continue;
      out += format_metric(cell_value(cell_it->second.scores));
    }
    out += '\n';
  }
  out += "avg";
  for (int i = 0; i < kModeCount; ++i) {
    out += ',';
    auto it = report.averages.find(static_cast<Mode>(i));
    if (it != report.averages.end()) out += format_metric(cell_value(it->second));
  }
  out += '\n';
  return out;
}

std::string report_json(const data::Corpus& corpus, const Report& report) {
  char digest[24];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(report.corpus_digest));

  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg;
  cfg["dim"] = static_cast<long>(report.config.dim);
  cfg["seeds_per_class"] = report.config.seeds_per_class;
  cfg["clusters"] = report.config.kmeans_k;
  cfg["classifier"] = classifier_name(report.config.classifier);
  std::vector<std::string> mode_names;
  for (Mode m : report.config.modes) mode_names.emplace_back(mode_name(m));
  cfg["modes"] = mode_names;
  cfg["oversample"] = report.config.oversample;
  cfg["all_includes_future"] = report.config.all_includes_future;
  cfg["pseudo_label_iterations"] = report.config.pseudo_label_iterations;
  j["provenance"] = {{"rng_seed", report.config.rng_seed},
                     {"corpus_digest", digest},
                     {"config", cfg}};

  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (int step : report.test_steps) {
    for (int i = 0; i < kModeCount; ++i) {
      auto mode_it = report.cells.find(static_cast<Mode>(i));
      if (mode_it == report.cells.end()) continue;
      auto cell_it = mode_it->second.find(step);
      if (cell_it == mode_it->second.end()) continue;
      const MetricCell& cell = cell_it->second;
      nlohmann::ordered_json c;
      c["test_step"] = step;
      c["step_name"] = corpus.manifest.steps.at(step);
      c["mode"] = kModeNames[i];
      c["accuracy"] = cell.scores.accuracy;
      c["macro_f1"] = cell.scores.macro_f1;
      c["per_class_f1"] = cell.scores.per_class_f1;
      c["support"] = cell.support;
      c["n_train"] = cell.n_train;
      c["n_eval"] = cell.n_eval;
      c["dim_clamped"] = cell.dim_clamped;
      cells.push_back(c);
    }
  }
  j["cells"] = cells;

  nlohmann::ordered_json averages = nlohmann::ordered_json::object();
  for (int i = 0; i < kModeCount; ++i) {
    auto it = report.averages.find(static_cast<Mode>(i));
    if (it == report.averages.end()) continue;
    averages[kModeNames[i]] = {{"accuracy", it->second.accuracy},
                               {"macro_f1", it->second.macro_f1}};
  }
  j["averages"] = averages;
  return j.dump(2) + "\n";
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "m,accuracy_mean,accuracy_lo,accuracy_hi,macro_f1_mean,macro_f1_lo,macro_f1_hi\n";
  for (const auto& p : points) {
    out += std::to_string(p.seeds_per_class);
    for (double v : {p.accuracy_mean, p.accuracy_lo, p.accuracy_hi, p.macro_f1_mean,
                     p.macro_f1_lo, p.macro_f1_hi}) {
      out += ',';
      out += format_metric(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace ssa::eval
