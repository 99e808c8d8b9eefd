#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ssa/alignment.hpp"
#include "ssa/data.hpp"
#include "ssa/error.hpp"
#include "ssa/eval.hpp"
#include "ssa/rng.hpp"

namespace {

// Output files registered here are removed unless the run commits them.
struct OutputGuard {
  std::vector<std::string> paths;
  bool committed = false;

  void track(const std::string& path) { paths.push_back(path); }
  void commit() { committed = true; }
  ~OutputGuard() {
    if (committed) return;
    for (const auto& p : paths) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) ssa::raise(ssa::ErrorCode::InvalidConfig, "cannot open '" + path + "' for writing");
  out << content;
}

int resolve_jobs(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("SSA_JOBS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void apply_jobs(int jobs) {
#ifdef _OPENMP
  omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) ssa::raise(ssa::ErrorCode::InvalidConfig, std::string("empty entry in ") + what);
    out.push_back(std::stoi(cur));
    cur.clear();
  };
  for (char c : s) {
    if (c == ',') flush();
    else cur.push_back(c);
  }
  flush();
  return out;
}

struct CommonEvalFlags {
  std::string data, manifest, out;
  long dim = 100;
  int seeds_per_class = 10;
  int clusters = 5;
  std::string classifier = "svm";
  std::vector<std::string> modes;
  bool oversample = false;
  bool all_includes_future = true;
  std::uint64_t seed = 0;
  int jobs = 0;
  int pseudo_iters = 1;
  double svm_c = 1.0;
};

void add_eval_flags(CLI::App* cmd, CommonEvalFlags& f) {
  cmd->add_option("--data", f.data, "corpus data file")->required();
  cmd->add_option("--manifest", f.manifest, "corpus manifest file")->required();
  cmd->add_option("--out", f.out, "output path prefix")->required();
  cmd->add_option("--dim", f.dim, "subspace dimension d")->check(CLI::PositiveNumber);
  cmd->add_option("--seeds-per-class", f.seeds_per_class, "labeled target samples per class")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--clusters", f.clusters, "k for instance-similarity clustering")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--classifier", f.classifier, "knn|centroid|svm|mlp");
  cmd->add_option("--mode", f.modes, "mode column to run (repeatable; default all eight)");
  cmd->add_flag("--oversample", f.oversample, "oversample minority classes in training sets");
  cmd->add_option("--all-includes-future", f.all_includes_future,
                  "whether the `all` baseline trains on steps after the test step");
  cmd->add_option("--seed", f.seed, "rng seed");
  cmd->add_option("--jobs", f.jobs, "worker threads (default: SSA_JOBS or processor count)");
  cmd->add_option("--pseudo-iters", f.pseudo_iters, "pseudo-labeling passes")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--svm-c", f.svm_c, "SVM penalty C")->check(CLI::PositiveNumber);
}

ssa::eval::RunConfig to_run_config(const CommonEvalFlags& f) {
  ssa::eval::RunConfig config;
  config.dim = f.dim;
  config.seeds_per_class = f.seeds_per_class;
  config.kmeans_k = f.clusters;
  config.classifier = ssa::eval::parse_classifier(f.classifier);
  config.svm.c = f.svm_c;
  config.rng_seed = f.seed;
  config.oversample = f.oversample;
  config.all_includes_future = f.all_includes_future;
  config.pseudo_label_iterations = f.pseudo_iters;
  if (!f.modes.empty()) {
    config.modes.clear();
    for (const auto& m : f.modes) config.modes.push_back(ssa::eval::parse_mode(m));
  }
  return config;
}

void print_config(const ssa::eval::RunConfig& c, int jobs) {
  std::printf("config: dim=%ld seeds-per-class=%d clusters=%d classifier=%s oversample=%d "
              "all-includes-future=%d pseudo-iters=%d seed=%llu jobs=%d\n",
              static_cast<long>(c.dim), c.seeds_per_class, c.kmeans_k,
              ssa::eval::classifier_name(c.classifier), c.oversample ? 1 : 0,
              c.all_includes_future ? 1 : 0, c.pseudo_label_iterations,
              static_cast<unsigned long long>(c.rng_seed), jobs);
  std::printf("modes:");
  for (auto m : c.modes) std::printf(" %s", ssa::eval::mode_name(m));
  std::printf("\n");
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int run(int argc, char** argv) {
  CLI::App app{"ssa: sequential subspace alignment for temporal domain adaptation"};
  app.require_subcommand(1);

  // ---- synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic temporal-drift corpus");
  std::string synth_preset, synth_out, synth_manifest;
  ssa::data::SynthConfig synth_cfg;
  double synth_drift = -1.0;
  synth->add_option("--preset", synth_preset,
                    "global-shift|class-swap|gradual-rotation|irregular")
      ->required();
  synth->add_option("--out", synth_out, "output data file")->required();
  synth->add_option("--manifest", synth_manifest, "output manifest file")->required();
  synth->add_option("--ambient-dim", synth_cfg.dimension, "ambient dimension D")
      ->check(CLI::PositiveNumber);
  synth->add_option("--classes", synth_cfg.classes, "number of classes")
      ->check(CLI::PositiveNumber);
  synth->add_option("--per-class", synth_cfg.per_class_per_step, "samples per class per step")
      ->check(CLI::PositiveNumber);
  synth->add_option("--steps", synth_cfg.steps, "number of time-steps")
      ->check(CLI::PositiveNumber);
  synth->add_option("--separation", synth_cfg.separation, "class separation in sigma units")
      ->check(CLI::PositiveNumber);
  synth->add_option("--sigma", synth_cfg.sigma, "class noise sigma")->check(CLI::PositiveNumber);
  synth->add_option("--drift", synth_drift, "drift magnitude per step (preset-dependent default)");
  synth->add_option("--seed", synth_cfg.rng_seed, "rng seed");

  // ---- split
  auto* split = app.add_subcommand("split", "apply stratified train/dev/test splits");
  std::string split_data, split_manifest, split_out, split_fractions = "0.8,0.1,0.1";
  std::uint64_t split_seed = 0;
  split->add_option("--data", split_data)->required();
  split->add_option("--manifest", split_manifest)->required();
  split->add_option("--out", split_out, "output data file")->required();
  split->add_option("--fractions", split_fractions, "train,dev,test fractions");
  split->add_option("--seed", split_seed, "rng seed");

  // ---- align
  auto* align = app.add_subcommand("align", "align one source step onto one target step");
  std::string align_data, align_manifest, align_out, align_mode = "semi";
  int align_source = 0, align_target = 1;
  long align_dim = 100;
  int align_m = 10, align_clusters = 5, align_pseudo_iters = 1;
  std::uint64_t align_seed = 0;
  align->add_option("--data", align_data)->required();
  align->add_option("--manifest", align_manifest)->required();
  align->add_option("--out", align_out, "output coordinates file")->required();
  align->add_option("--source-step", align_source, "source step index")->required();
  align->add_option("--target-step", align_target, "target step index")->required();
  align->add_option("--mode", align_mode, "unsup|semi|semi_clst");
  align->add_option("--dim", align_dim, "subspace dimension d")->check(CLI::PositiveNumber);
  align->add_option("--seeds-per-class", align_m)->check(CLI::PositiveNumber);
  align->add_option("--clusters", align_clusters)->check(CLI::PositiveNumber);
  align->add_option("--pseudo-iters", align_pseudo_iters)->check(CLI::PositiveNumber);
  align->add_option("--seed", align_seed, "rng seed");

  // ---- eval
  auto* eval_cmd = app.add_subcommand("eval", "run the sequential evaluation protocol");
  CommonEvalFlags eval_flags;
  add_eval_flags(eval_cmd, eval_flags);

  // ---- sweep
  auto* sweep = app.add_subcommand("sweep", "sweep seeds-per-class for the semi mode");
  CommonEvalFlags sweep_flags;
  add_eval_flags(sweep, sweep_flags);
  std::string sweep_grid = "1,2,5,10";
  int sweep_reps = 5;
  sweep->add_option("--m-grid", sweep_grid, "comma-separated seeds-per-class grid");
  sweep->add_option("--reps", sweep_reps, "seeded repetitions per grid point")
      ->check(CLI::PositiveNumber);

  // ---- inspect
  auto* inspect = app.add_subcommand("inspect", "print corpus statistics");
  std::string inspect_data, inspect_manifest;
  inspect->add_option("--data", inspect_data)->required();
  inspect->add_option("--manifest", inspect_manifest)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  OutputGuard guard;

  if (synth->parsed()) {
    synth_cfg.preset = ssa::data::parse_preset(synth_preset);
    if (synth_drift >= 0.0) {
      synth_cfg.drift = synth_drift;
    } else {
      switch (synth_cfg.preset) {
        case ssa::data::Preset::gradual_rotation: synth_cfg.drift = 0.2; break;
        default: synth_cfg.drift = 1.0; break;
      }
    }
    std::printf("synth: preset=%s D=%d classes=%d per-class=%d steps=%d separation=%g sigma=%g "
                "drift=%g seed=%llu\n",
                ssa::data::preset_name(synth_cfg.preset), synth_cfg.dimension, synth_cfg.classes,
                synth_cfg.per_class_per_step, synth_cfg.steps, synth_cfg.separation,
                synth_cfg.sigma, synth_cfg.drift,
                static_cast<unsigned long long>(synth_cfg.rng_seed));
    ssa::data::Corpus corpus = ssa::data::generate_synthetic(synth_cfg);
    guard.track(synth_out);
    guard.track(synth_manifest);
    ssa::data::write_corpus(corpus, synth_out, synth_manifest);
    std::printf("wrote %zu records to %s\n", corpus.records.size(), synth_out.c_str());
  } else if (split->parsed()) {
    auto fr = split_fractions;
    std::array<double, 3> fractions{};
    {
      std::size_t a = fr.find(','), b = fr.rfind(',');
      if (a == std::string::npos || b == a)
        ssa::raise(ssa::ErrorCode::InvalidConfig, "--fractions needs three comma-separated values");
      fractions = {std::stod(fr.substr(0, a)), std::stod(fr.substr(a + 1, b - a - 1)),
                   std::stod(fr.substr(b + 1))};
    }
    std::printf("split: fractions=%s seed=%llu\n", split_fractions.c_str(),
                static_cast<unsigned long long>(split_seed));
    ssa::data::Corpus corpus = ssa::data::read_corpus(split_data, split_manifest);
    corpus = ssa::data::split_corpus(std::move(corpus), fractions, split_seed);
    guard.track(split_out);
    write_file(split_out, ssa::data::serialize_data(corpus));
  } else if (align->parsed()) {
    std::printf("align: mode=%s source=%d target=%d dim=%ld seeds-per-class=%d seed=%llu\n",
                align_mode.c_str(), align_source, align_target, align_dim, align_m,
                static_cast<unsigned long long>(align_seed));
    ssa::data::Corpus corpus = ssa::data::read_corpus(align_data, align_manifest);

    auto domain_of = [&](int step, bool labeled_only) {
      ssa::alignment::DomainData d;
      std::vector<const ssa::data::EmbeddingRecord*> rows;
      for (const auto& rec : corpus.records)
        if (rec.step == step && (!labeled_only || !rec.label.empty())) rows.push_back(&rec);
      if (rows.empty())
        ssa::raise(ssa::ErrorCode::EmptyStep, "step " + std::to_string(step) + " has no rows");
      d.x.resize(static_cast<Eigen::Index>(rows.size()), corpus.manifest.dimension);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        d.x.row(static_cast<Eigen::Index>(i)) = rows[i]->vector;
        d.labels.push_back(rows[i]->label);
        d.sample_ids.push_back(rows[i]->id);
      }
      return d;
    };

    ssa::alignment::DomainData source = domain_of(align_source, true);
    ssa::alignment::DomainData target = domain_of(align_target, false);

    ssa::alignment::AlignedPair pair;
    if (align_mode == "unsup") {
      pair = ssa::alignment::align_unsupervised(source, target, align_dim);
    } else if (align_mode == "semi" || align_mode == "semi_clst") {
      ssa::alignment::SeedSet seeds = ssa::eval::select_seeds(
          corpus, align_target, align_m,
          ssa::rng::derive({align_seed, static_cast<std::uint64_t>(align_target),
                            ssa::rng::hash_string("seeds")}));
      ssa::alignment::SemiSupervisedOptions options;
      options.use_clusters = align_mode == "semi_clst";
      options.kmeans_k = align_clusters;
      options.pseudo_label_iterations = align_pseudo_iters;
      pair = ssa::alignment::align_semi_supervised(source, target, seeds, align_dim, options,
                                                   align_seed);
    } else {
      ssa::raise(ssa::ErrorCode::InvalidConfig, "align --mode must be unsup, semi or semi_clst");
    }
    if (pair.dim_clamped)
      std::printf("note: requested dim %ld clamped to %ld by the data\n", align_dim,
                  static_cast<long>(pair.dim()));

    std::string out = "domain,id,label,seed";
    for (Eigen::Index c = 0; c < pair.dim(); ++c) out += ",c" + std::to_string(c);
    out += '\n';
    for (Eigen::Index i = 0; i < pair.source_coords.rows(); ++i) {
      out += "source," + source.sample_ids[static_cast<std::size_t>(i)] + "," +
             source.labels[static_cast<std::size_t>(i)] + ",0";
      for (Eigen::Index c = 0; c < pair.dim(); ++c)
        out += "," + format17(pair.source_coords(i, c));
      out += '\n';
    }
    for (Eigen::Index i = 0; i < pair.target_coords.rows(); ++i) {
      out += "target," + target.sample_ids[static_cast<std::size_t>(i)] + "," +
             pair.target_labels[static_cast<std::size_t>(i)] + "," +
             (pair.target_seed_flags[static_cast<std::size_t>(i)] ? "1" : "0");
      for (Eigen::Index c = 0; c < pair.dim(); ++c)
        out += "," + format17(pair.target_coords(i, c));
      out += '\n';
    }
    guard.track(align_out);
    write_file(align_out, out);
  } else if (eval_cmd->parsed()) {
    ssa::eval::RunConfig config = to_run_config(eval_flags);
    int jobs = resolve_jobs(eval_flags.jobs);
    apply_jobs(jobs);
    print_config(config, jobs);
    ssa::data::Corpus corpus = ssa::data::read_corpus(eval_flags.data, eval_flags.manifest);
    ssa::eval::Report report = ssa::eval::run_protocol(corpus, config);
    const std::string acc_path = eval_flags.out + "_accuracy.csv";
    const std::string f1_path = eval_flags.out + "_macro_f1.csv";
    const std::string json_path = eval_flags.out + "_report.json";
    guard.track(acc_path);
    guard.track(f1_path);
    guard.track(json_path);
    write_file(acc_path, ssa::eval::report_csv(corpus, report, ssa::eval::MetricKind::accuracy));
    write_file(f1_path, ssa::eval::report_csv(corpus, report, ssa::eval::MetricKind::macro_f1));
    write_file(json_path, ssa::eval::report_json(corpus, report));
    std::printf("wrote %s, %s, %s\n", acc_path.c_str(), f1_path.c_str(), json_path.c_str());
  } else if (sweep->parsed()) {
    ssa::eval::RunConfig config = to_run_config(sweep_flags);
    config.sweep_repetitions = sweep_reps;
    int jobs = resolve_jobs(sweep_flags.jobs);
    apply_jobs(jobs);
    print_config(config, jobs);
    std::printf("sweep: m-grid=%s reps=%d\n", sweep_grid.c_str(), sweep_reps);
    ssa::data::Corpus corpus = ssa::data::read_corpus(sweep_flags.data, sweep_flags.manifest);
    auto points = ssa::eval::sweep_seeds(corpus, config, parse_int_list(sweep_grid, "--m-grid"));
    const std::string path = sweep_flags.out + "_sweep.csv";
    guard.track(path);
    write_file(path, ssa::eval::sweep_csv(points));
    std::printf("wrote %s\n", path.c_str());
  } else if (inspect->parsed()) {
    ssa::data::Corpus corpus = ssa::data::read_corpus(inspect_data, inspect_manifest);
    std::printf("dimension: %d\n", corpus.manifest.dimension);
    std::printf("records: %zu\n", corpus.records.size());
    std::printf("labels:");
    for (const auto& l : corpus.manifest.labels) std::printf(" %s", l.c_str());
    std::printf("\ncorpus digest: %016llx\n",
                static_cast<unsigned long long>(ssa::data::corpus_digest(corpus)));
    for (const auto& [step, name] : corpus.manifest.steps) {
      int train = 0, dev = 0, test = 0, unlabeled = 0;
      std::map<std::string, int> per_class;
      for (const auto& rec : corpus.records) {
        if (rec.step != step) continue;
        if (rec.split == ssa::data::Split::train) ++train;
        if (rec.split == ssa::data::Split::dev) ++dev;
        if (rec.split == ssa::data::Split::test) ++test;
        if (rec.label.empty()) ++unlabeled; else ++per_class[rec.label];
      }
      std::printf("step %d (%s): train=%d dev=%d test=%d unlabeled=%d classes:", step,
                  name.c_str(), train, dev, test, unlabeled);
      for (const auto& [label, count] : per_class) std::printf(" %s=%d", label.c_str(), count);
      std::printf("\n");
    }
  }

  guard.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ssa::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.category()) {
      case ssa::ErrorCategory::usage: return 1;
      case ssa::ErrorCategory::data: return 2;
      case ssa::ErrorCategory::numeric: return 3;
    }
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
