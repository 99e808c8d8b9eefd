#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ssa::data {

enum class Split { train, dev, test };

const char* split_name(Split s);
Split parse_split(const std::string& s);

// One timestamped, optionally labeled embedding sample. An empty label means
// the sample is unlabeled.
struct EmbeddingRecord {
  std::string id;
  int step = 0;
  Split split = Split::train;
  std::string label;
  Eigen::RowVectorXd vector;
};

struct Manifest {
  int dimension = 0;
  std::map<int, std::string> steps;  // step index -> display name
  std::vector<std::string> labels;   // label inventory
};

struct Corpus {
  std::vector<EmbeddingRecord> records;
  Manifest manifest;

  // Rejects records referencing an unlisted step or label, duplicate ids,
  // ragged vectors, and non-finite entries.
  void validate() const;

  std::vector<int> step_indices() const;  // sorted manifest steps
};

// Data file: UTF-8 CSV, LF endings, header `id,step,split,label,e0,...,e{D-1}`,
// floats at 17 significant digits. Manifest: JSON with keys `dimension`,
// `steps`, `labels`.
Corpus read_corpus(const std::string& data_path, const std::string& manifest_path);
void write_corpus(const Corpus& corpus, const std::string& data_path,
                  const std::string& manifest_path);

std::string serialize_data(const Corpus& corpus);
std::string serialize_manifest(const Manifest& manifest);
std::uint64_t corpus_digest(const Corpus& corpus);

// Per-step, per-class stratified assignment by seeded shuffle; rounding
// residue goes to train. Existing split fields are overwritten.
Corpus split_corpus(Corpus corpus, std::array<double, 3> fractions, std::uint64_t rng_seed);

enum class Preset { global_shift, class_swap, gradual_rotation, irregular };

const char* preset_name(Preset p);
Preset parse_preset(const std::string& s);

// Synthetic temporal-drift corpus configuration. Class means sit on a regular
// simplex with pairwise distance `separation * sigma`. Drift semantics per
// preset: global-shift moves all classes by `drift` (absolute length) per
// step along a fixed seeded direction; class-swap exchanges the first two
// class means at the final step (no swap when drift == 0); gradual-rotation
// rotates the class means by `drift` radians per step in a plane spanned by
// the first class-mean axis and a seeded orthogonal direction; irregular
// accumulates per-step offsets with seeded half-Cauchy magnitudes scaled by
// `drift`. Splits are assigned 80/10/10, stratified, from the same seed.
struct SynthConfig {
  Preset preset = Preset::class_swap;
  int dimension = 16;
  int classes = 2;
  int per_class_per_step = 100;
  int steps = 2;
  double separation = 10.0;  // in units of sigma
  double sigma = 1.0;
  double drift = 1.0;
  std::uint64_t rng_seed = 0;
};

Corpus generate_synthetic(const SynthConfig& config);

}  // namespace ssa::data
