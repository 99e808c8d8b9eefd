#include "ssa/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "ssa/error.hpp"
#include "ssa/rng.hpp"

namespace ssa::data {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& context) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    raise(ErrorCode::MalformedRecord, "bad numeric field '" + s + "' in " + context);
  if (!std::isfinite(v))
    raise(ErrorCode::MalformedRecord, "non-finite value '" + s + "' in " + context);
  return v;
}

int parse_int(const std::string& s, const std::string& context) {
  const char* begin = s.c_str();
  char* end = nullptr;
  long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    raise(ErrorCode::MalformedRecord, "bad integer field '" + s + "' in " + context);
  return static_cast<int>(v);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string expected_header(int dimension) {
  std::string h = "id,step,split,label";
  for (int i = 0; i < dimension; ++i) h += ",e" + std::to_string(i);
  return h;
}

void check_field_value(const std::string& value, const char* what) {
  if (value.find(',') != std::string::npos || value.find('\n') != std::string::npos)
    raise(ErrorCode::MalformedRecord, std::string(what) + " may not contain ',' or newline");
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  raise(ErrorCode::MalformedRecord, "unknown split '" + s + "'");
}

const char* preset_name(Preset p) {
  switch (p) {
    case Preset::global_shift: return "global-shift";
    case Preset::class_swap: return "class-swap";
    case Preset::gradual_rotation: return "gradual-rotation";
    case Preset::irregular: return "irregular";
  }
  return "class-swap";
}

Preset parse_preset(const std::string& s) {
  if (s == "global-shift") return Preset::global_shift;
  if (s == "class-swap") return Preset::class_swap;
  if (s == "gradual-rotation") return Preset::gradual_rotation;
  if (s == "irregular") return Preset::irregular;
  raise(ErrorCode::InvalidConfig, "unknown preset '" + s + "'");
}

void Corpus::validate() const {
  if (manifest.dimension < 1) raise(ErrorCode::InvalidConfig, "manifest dimension must be >= 1");
  std::unordered_set<std::string> labels(manifest.labels.begin(), manifest.labels.end());
  std::unordered_set<std::string> ids;
  ids.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.vector.size() != manifest.dimension)
      raise(ErrorCode::RaggedRow, "record '" + rec.id + "' has wrong vector length");
    if (!rec.vector.allFinite())
      raise(ErrorCode::NonFiniteInput, "record '" + rec.id + "' has a non-finite entry");
    if (!manifest.steps.count(rec.step))
      raise(ErrorCode::UnknownStep,
            "record '" + rec.id + "' references step " + std::to_string(rec.step));
    if (!rec.label.empty() && !labels.count(rec.label))
      raise(ErrorCode::UnknownLabel, "record '" + rec.id + "' has label '" + rec.label +
                                         "' not in the manifest inventory");
    if (!ids.insert(rec.id).second) raise(ErrorCode::DuplicateId, "duplicate id '" + rec.id + "'");
  }
}

std::vector<int> Corpus::step_indices() const {
  std::vector<int> steps;
  steps.reserve(manifest.steps.size());
  for (const auto& [idx, name] : manifest.steps) steps.push_back(idx);
  return steps;
}

std::string serialize_data(const Corpus& corpus) {
  std::string out = expected_header(corpus.manifest.dimension);
  out += '\n';
  for (const auto& rec : corpus.records) {
    check_field_value(rec.id, "id");
    check_field_value(rec.label, "label");
    out += rec.id;
    out += ',';
    out += std::to_string(rec.step);
    out += ',';
    out += split_name(rec.split);
    out += ',';
    out += rec.label;
    for (Eigen::Index i = 0; i < rec.vector.size(); ++i) {
      out += ',';
      out += format_double(rec.vector(i));
    }
    out += '\n';
  }
  return out;
}

std::string serialize_manifest(const Manifest& manifest) {
  nlohmann::ordered_json j;
  j["dimension"] = manifest.dimension;
  nlohmann::ordered_json steps = nlohmann::ordered_json::object();
  for (const auto& [idx, name] : manifest.steps) steps[std::to_string(idx)] = name;
  j["steps"] = steps;
  j["labels"] = manifest.labels;
  return j.dump(2) + "\n";
}

std::uint64_t corpus_digest(const Corpus& corpus) {
  return rng::hash_string(serialize_data(corpus));
}

void write_corpus(const Corpus& corpus, const std::string& data_path,
                  const std::string& manifest_path) {
  corpus.validate();
  {
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) raise(ErrorCode::InvalidConfig, "cannot open '" + manifest_path + "' for writing");
    out << serialize_manifest(corpus.manifest);
  }
  std::ofstream out(data_path, std::ios::binary);
  if (!out) raise(ErrorCode::InvalidConfig, "cannot open '" + data_path + "' for writing");
  out << serialize_data(corpus);
}

namespace {

Manifest read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) raise(ErrorCode::InvalidConfig, "cannot open manifest '" + manifest_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedHeader, "manifest parse error: " + std::string(e.what()));
  }
  Manifest m;
  try {
    m.dimension = j.at("dimension").get<int>();
    for (const auto& [key, value] : j.at("steps").items())
      m.steps[parse_int(key, "manifest steps")] = value.get<std::string>();
    m.labels = j.at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::MalformedHeader, "manifest schema error: " + std::string(e.what()));
  }
  return m;
}

}  // namespace

Corpus read_corpus(const std::string& data_path, const std::string& manifest_path) {
  Corpus corpus;
  corpus.manifest = read_manifest(manifest_path);
  const int dim = corpus.manifest.dimension;

  std::ifstream in(data_path, std::ios::binary);
  if (!in) raise(ErrorCode::InvalidConfig, "cannot open data file '" + data_path + "'");

  std::string line;
  if (!std::getline(in, line)) raise(ErrorCode::MalformedHeader, "empty data file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header(dim))
    raise(ErrorCode::MalformedHeader, "header does not match `id,step,split,label,e0,...`");

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    const std::string context = "line " + std::to_string(lineno);
    if (fields.size() != static_cast<std::size_t>(4 + dim))
      raise(ErrorCode::RaggedRow, context + " has " + std::to_string(fields.size()) +
                                      " fields, expected " + std::to_string(4 + dim));
    EmbeddingRecord rec;
    rec.id = fields[0];
    rec.step = parse_int(fields[1], context);
    rec.split = parse_split(fields[2]);
    rec.label = fields[3];
    rec.vector.resize(dim);
    for (int i = 0; i < dim; ++i) rec.vector(i) = parse_double(fields[4 + i], context);
    corpus.records.push_back(std::move(rec));
  }
  corpus.validate();
  return corpus;
}

Corpus split_corpus(Corpus corpus, std::array<double, 3> fractions, std::uint64_t rng_seed) {
  double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9)
    raise(ErrorCode::InvalidConfig, "split fractions must sum to 1");
  if (fractions[0] < 0 || fractions[1] < 0 || fractions[2] < 0)
    raise(ErrorCode::InvalidConfig, "split fractions must be non-negative");
  corpus.validate();

  // strata: (step, label) -> record indices in corpus order
  std::map<std::pair<int, std::string>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.records.size(); ++i)
    strata[{corpus.records[i].step, corpus.records[i].label}].push_back(i);

  std::unordered_set<int> populated;
  for (const auto& rec : corpus.records) populated.insert(rec.step);
  for (const auto& [idx, name] : corpus.manifest.steps)
    if (!populated.count(idx))
      raise(ErrorCode::EmptyStep, "step " + std::to_string(idx) + " has no records");

  for (auto& [key, rows] : strata) {
    rng::Rng rng(rng::derive({rng_seed, static_cast<std::uint64_t>(key.first),
                              rng::hash_string(key.second)}));
    rng.shuffle(rows);
    const std::size_t n = rows.size();
    const auto n_dev = static_cast<std::size_t>(std::floor(fractions[1] * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::floor(fractions[2] * static_cast<double>(n)));
    const std::size_t n_train = n - n_dev - n_test;
    for (std::size_t i = 0; i < n; ++i) {
      Split s = i < n_train ? Split::train : (i < n_train + n_dev ? Split::dev : Split::test);
      corpus.records[rows[i]].split = s;
    }
  }
  return corpus;
}

namespace {

// C class means on a regular simplex, centered, pairwise distance `sep`.
std::vector<Eigen::RowVectorXd> simplex_means(int classes, int dimension, double sep) {
  std::vector<Eigen::RowVectorXd> means(classes, Eigen::RowVectorXd::Zero(dimension));
  const double scale = sep / std::sqrt(2.0);
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < classes; ++i)
      means[c](i) = ((i == c ? 1.0 : 0.0) - 1.0 / classes) * scale;
  return means;
}

Eigen::RowVectorXd random_unit(rng::Rng& rng, int dimension) {
  Eigen::RowVectorXd v(dimension);
  for (int i = 0; i < dimension; ++i) v(i) = rng.normal();
  double norm = v.norm();
  if (norm == 0.0) v(0) = 1.0; else v /= norm;
  return v;
}

// Rotate v by theta inside the plane spanned by orthonormal p, q.
Eigen::RowVectorXd rotate_in_plane(const Eigen::RowVectorXd& v, const Eigen::RowVectorXd& p,
                                   const Eigen::RowVectorXd& q, double theta) {
  double a = v.dot(p);
  double b = v.dot(q);
  double c = std::cos(theta), s = std::sin(theta);
  return v + (a * (c - 1.0) - b * s) * p + (a * s + b * (c - 1.0)) * q;
}

}  // namespace

Corpus generate_synthetic(const SynthConfig& cfg) {
  if (cfg.dimension < 1 || cfg.classes < 1 || cfg.per_class_per_step < 1 || cfg.steps < 1)
    raise(ErrorCode::InvalidConfig, "synthetic counts must be positive");
  if (cfg.separation <= 0.0) raise(ErrorCode::InvalidConfig, "separation must be positive");
  if (cfg.sigma <= 0.0) raise(ErrorCode::InvalidConfig, "sigma must be positive");
  if (cfg.dimension < cfg.classes)
    raise(ErrorCode::InvalidConfig, "dimension must be >= number of classes");
  if (cfg.preset == Preset::class_swap && cfg.classes < 2)
    raise(ErrorCode::InvalidConfig, "class-swap needs at least 2 classes");
  if (cfg.preset == Preset::gradual_rotation && cfg.dimension < 2)
    raise(ErrorCode::InvalidConfig, "gradual-rotation needs dimension >= 2");

  rng::Rng rng(rng::derive({cfg.rng_seed, rng::hash_string("synth")}));
  const auto base = simplex_means(cfg.classes, cfg.dimension, cfg.separation * cfg.sigma);

  // Preset geometry, drawn before any sample noise.
  Eigen::RowVectorXd shift_dir;
  Eigen::RowVectorXd plane_p, plane_q;
  std::vector<Eigen::RowVectorXd> step_offsets(cfg.steps, Eigen::RowVectorXd::Zero(cfg.dimension));
  switch (cfg.preset) {
    case Preset::global_shift:
      shift_dir = random_unit(rng, cfg.dimension);
      for (int t = 0; t < cfg.steps; ++t) step_offsets[t] = (cfg.drift * t) * shift_dir;
      break;
    case Preset::class_swap:
      break;
    case Preset::gradual_rotation: {
      // First axis of the plane follows the first class mean so the class
      // geometry actually rotates; second axis is a seeded orthogonal.
      plane_p = base[0].norm() > 0 ? Eigen::RowVectorXd(base[0] / base[0].norm())
                                   : Eigen::RowVectorXd(Eigen::RowVectorXd::Unit(cfg.dimension, 0));
      Eigen::RowVectorXd q = random_unit(rng, cfg.dimension);
      q -= q.dot(plane_p) * plane_p;
      while (q.norm() < 1e-8) {
        q = random_unit(rng, cfg.dimension);
        q -= q.dot(plane_p) * plane_p;
      }
      plane_q = q / q.norm();
      break;
    }
    case Preset::irregular: {
      Eigen::RowVectorXd offset = Eigen::RowVectorXd::Zero(cfg.dimension);
      for (int t = 0; t < cfg.steps; ++t) {
        if (t > 0) {
          double mag = cfg.drift * std::abs(std::tan(3.14159265358979323846 * (rng.uniform() - 0.5)));
          offset += mag * random_unit(rng, cfg.dimension);
        }
        step_offsets[t] = offset;
      }
      break;
    }
  }

  Corpus corpus;
  corpus.manifest.dimension = cfg.dimension;
  for (int t = 0; t < cfg.steps; ++t) corpus.manifest.steps[t] = "t" + std::to_string(t);
  for (int c = 0; c < cfg.classes; ++c) corpus.manifest.labels.push_back("c" + std::to_string(c));

  for (int t = 0; t < cfg.steps; ++t) {
    for (int c = 0; c < cfg.classes; ++c) {
      Eigen::RowVectorXd mean = base[c];
      switch (cfg.preset) {
        case Preset::global_shift:
        case Preset::irregular:
          mean += step_offsets[t];
          break;
        case Preset::class_swap:
          if (cfg.drift != 0.0 && t == cfg.steps - 1) {
            if (c == 0) mean = base[1];
            if (c == 1) mean = base[0];
          }
          break;
        case Preset::gradual_rotation:
          mean = rotate_in_plane(base[c], plane_p, plane_q, cfg.drift * t);
          break;
      }
      for (int i = 0; i < cfg.per_class_per_step; ++i) {
        EmbeddingRecord rec;
        rec.id = "r" + std::to_string(t) + "_" + std::to_string(c) + "_" + std::to_string(i);
        rec.step = t;
        rec.label = corpus.manifest.labels[c];
        rec.vector.resize(cfg.dimension);
        for (int k = 0; k < cfg.dimension; ++k) rec.vector(k) = mean(k) + cfg.sigma * rng.normal();
        corpus.records.push_back(std::move(rec));
      }
    }
  }

  return split_corpus(std::move(corpus), {0.8, 0.1, 0.1},
                      rng::derive({cfg.rng_seed, rng::hash_string("split")}));
}

}  // namespace ssa::data
