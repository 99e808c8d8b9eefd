#include "ssa/classify.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "ssa/error.hpp"
#include "ssa/kernels.hpp"
#include "ssa/rng.hpp"

namespace ssa::classify {

void LabeledSet::check() const {
  if (labels.size() != static_cast<std::size_t>(coords.rows()))
    raise(ErrorCode::LengthMismatch, "labels do not match coordinate rows");
  for (const auto& l : labels)
    if (l.empty()) raise(ErrorCode::EmptyClass, "every training row needs a label");
}

std::vector<std::string> LabeledSet::classes() const {
  std::set<std::string> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

LabeledSet oversample(const LabeledSet& set, std::uint64_t rng_seed) {
  set.check();
  if (set.labels.empty()) raise(ErrorCode::EmptyClass, "cannot oversample an empty set");

  std::map<std::string, std::vector<Eigen::Index>> by_class;
  for (std::size_t i = 0; i < set.labels.size(); ++i)
    by_class[set.labels[i]].push_back(static_cast<Eigen::Index>(i));

  std::size_t majority = 0;
  for (const auto& [label, rows] : by_class) majority = std::max(majority, rows.size());

  rng::Rng rng(rng_seed);
  std::vector<Eigen::Index> picks;
  for (const auto& [label, rows] : by_class) {
    picks.insert(picks.end(), rows.begin(), rows.end());
    for (std::size_t extra = rows.size(); extra < majority; ++extra)
      picks.push_back(rows[rng.below(rows.size())]);
  }
  rng.shuffle(picks);

  LabeledSet out;
  out.coords.resize(static_cast<Eigen::Index>(picks.size()), set.coords.cols());
  out.labels.resize(picks.size());
  for (std::size_t i = 0; i < picks.size(); ++i) {
    out.coords.row(static_cast<Eigen::Index>(i)) = set.coords.row(picks[i]);
    out.labels[i] = set.labels[static_cast<std::size_t>(picks[i])];
  }
  return out;
}

CentroidModel fit_centroid(const LabeledSet& set) {
  set.check();
  if (set.labels.empty()) raise(ErrorCode::EmptyClass, "empty training set");
  CentroidModel model;
  model.classes = set.classes();
  model.centroids = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.classes.size()),
                                          set.coords.cols());
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(set.coords.cols());
    Eigen::Index count = 0;
    for (std::size_t i = 0; i < set.labels.size(); ++i) {
      if (set.labels[i] == model.classes[c]) {
        sum += set.coords.row(static_cast<Eigen::Index>(i));
        ++count;
      }
    }
    model.centroids.row(static_cast<Eigen::Index>(c)) = sum / static_cast<double>(count);
  }
  return model;
}

KnnModel fit_knn(const LabeledSet& set, int k) {
  set.check();
  if (set.labels.empty()) raise(ErrorCode::EmptyClass, "empty training set");
  if (k < 1) raise(ErrorCode::InvalidConfig, "k must be >= 1");
  return KnnModel{k, set.coords, set.labels, set.classes()};
}

// ---------------------------------------------------------------------------
// SVM with RBF kernel, trained by SMO.

namespace {

double auto_gamma(const Eigen::MatrixXd& coords) {
  const Eigen::Index n = coords.rows(), d = coords.cols();
  Eigen::RowVectorXd mean = coords.colwise().mean();
  double var_sum = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double diff = coords(i, j) - mean(j);
      s += diff * diff;
    }
    var_sum += s / static_cast<double>(n);
  }
  double mean_var = var_sum / static_cast<double>(d);
  if (mean_var <= 0.0) return 1.0;
  return 1.0 / (static_cast<double>(d) * mean_var);
}

struct SmoProblem {
  const Eigen::MatrixXd& kernel;
  const Eigen::VectorXd& y;
  double c;
  double tol;
  long max_steps;
};

// Platt-style SMO on the dual. `errors` caches f(x_i) - y_i.
class SmoSolver {
 public:
  SmoSolver(const SmoProblem& p, std::uint64_t rng_seed)
      : p_(p),
        n_(p.y.size()),
        alpha_(Eigen::VectorXd::Zero(p.y.size())),
        errors_(-p.y),
        rng_(rng_seed) {}

  void solve() {
    long steps = 0;
    bool examine_all = true;
    while (steps < p_.max_steps) {
      int changed = 0;
      std::vector<Eigen::Index> order(static_cast<std::size_t>(n_));
      std::iota(order.begin(), order.end(), 0);
      rng_.shuffle(order);
      for (Eigen::Index i : order) {
        if (!examine_all && !is_free(i)) continue;
        if (examine(i)) {
          ++changed;
          if (++steps >= p_.max_steps) break;
        }
      }
      if (examine_all) {
        if (changed == 0) break;  // KKT holds everywhere within tol
        examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
    }
  }

  double bias() const { return bias_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }

 private:
  bool is_free(Eigen::Index i) const { return alpha_(i) > 0.0 && alpha_(i) < p_.c; }

  bool violates(Eigen::Index i) const {
    double r = errors_(i) * p_.y(i);
    return (r < -p_.tol && alpha_(i) < p_.c) || (r > p_.tol && alpha_(i) > 0.0);
  }

  bool examine(Eigen::Index i2) {
    if (!violates(i2)) return false;
    // second-choice heuristic: maximize |E1 - E2| over free points
    Eigen::Index best = -1;
    double best_gap = -1.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (i == i2 || !is_free(i)) continue;
      double gap = std::abs(errors_(i) - errors_(i2));
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best >= 0 && step(best, i2)) return true;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_));
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(order);
    for (Eigen::Index i : order)
      if (i != i2 && is_free(i) && step(i, i2)) return true;
    for (Eigen::Index i : order)
      if (i != i2 && step(i, i2)) return true;
    return false;
  }

  bool step(Eigen::Index i1, Eigen::Index i2) {
    if (i1 == i2) return false;
    double a1 = alpha_(i1), a2 = alpha_(i2);
    double y1 = p_.y(i1), y2 = p_.y(i2);
    double e1 = errors_(i1), e2 = errors_(i2);
    double s = y1 * y2;
    double low, high;
    if (s < 0) {
      low = std::max(0.0, a2 - a1);
      high = std::min(p_.c, p_.c + a2 - a1);
    } else {
      low = std::max(0.0, a1 + a2 - p_.c);
      high = std::min(p_.c, a1 + a2);
    }
    if (low >= high) return false;
    double eta = p_.kernel(i1, i1) + p_.kernel(i2, i2) - 2.0 * p_.kernel(i1, i2);
    if (eta <= 1e-12) return false;  // coincident points under an RBF kernel
    double a2_new = a2 + y2 * (e1 - e2) / eta;
    a2_new = std::clamp(a2_new, low, high);
    if (std::abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12)) return false;
    double a1_new = a1 + s * (a2 - a2_new);

    double b1 = bias_ - e1 - y1 * (a1_new - a1) * p_.kernel(i1, i1) -
                y2 * (a2_new - a2) * p_.kernel(i1, i2);
    double b2 = bias_ - e2 - y1 * (a1_new - a1) * p_.kernel(i1, i2) -
                y2 * (a2_new - a2) * p_.kernel(i2, i2);
    double new_bias;
    if (a1_new > 0.0 && a1_new < p_.c)
      new_bias = b1;
    else if (a2_new > 0.0 && a2_new < p_.c)
      new_bias = b2;
    else
      new_bias = 0.5 * (b1 + b2);

    double db = new_bias - bias_;
    for (Eigen::Index i = 0; i < n_; ++i)
      errors_(i) += y1 * (a1_new - a1) * p_.kernel(i1, i) +
                    y2 * (a2_new - a2) * p_.kernel(i2, i) + db;
    alpha_(i1) = a1_new;
    alpha_(i2) = a2_new;
    bias_ = new_bias;
    return true;
  }

  const SmoProblem& p_;
  Eigen::Index n_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd errors_;
  double bias_ = 0.0;
  rng::Rng rng_;
};

// Canonical row order: by label, then lexicographically by coordinates, then
// by original index. Training becomes independent of input row order.
std::vector<Eigen::Index> canonical_order(const LabeledSet& set) {
  std::vector<Eigen::Index> order(set.labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const auto& la = set.labels[static_cast<std::size_t>(a)];
    const auto& lb = set.labels[static_cast<std::size_t>(b)];
    if (la != lb) return la < lb;
    for (Eigen::Index j = 0; j < set.coords.cols(); ++j) {
      if (set.coords(a, j) < set.coords(b, j)) return true;
      if (set.coords(a, j) > set.coords(b, j)) return false;
    }
    return a < b;
  });
  return order;
}

}  // namespace

SvmRbfModel fit_svm_rbf(const LabeledSet& set, const SvmRbfConfig& config,
                        std::uint64_t rng_seed) {
  set.check();
  auto classes = set.classes();
  if (classes.size() < 2) raise(ErrorCode::SingleClass, "SVM needs at least 2 classes");
  if (set.coords.rows() < 2) raise(ErrorCode::DegenerateInput, "SVM needs at least 2 samples");

  SvmRbfModel model;
  model.classes = classes;
  model.c = config.c;

  auto order = canonical_order(set);
  model.support.resize(set.coords.rows(), set.coords.cols());
  std::vector<std::string> labels(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    model.support.row(static_cast<Eigen::Index>(i)) = set.coords.row(order[i]);
    labels[i] = set.labels[static_cast<std::size_t>(order[i])];
  }

  model.gamma = config.gamma > 0.0 ? config.gamma : auto_gamma(model.support);
  Eigen::MatrixXd kernel = kernels::rbf_kernel(model.support, model.support, model.gamma);

  const Eigen::Index n = model.support.rows();
  const long max_steps = 10L * static_cast<long>(n) * static_cast<long>(classes.size());
  model.submodels.resize(classes.size());

  // One-vs-rest sub-models are independent; kernel matrix is shared read-only.
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t c = 0; c < classes.size(); ++c) {
    try {
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < n; ++i)
        y(i) = labels[static_cast<std::size_t>(i)] == classes[c] ? 1.0 : -1.0;
      SmoProblem problem{kernel, y, config.c, config.kkt_tolerance, max_steps};
      SmoSolver solver(problem, rng::derive({rng_seed, static_cast<std::uint64_t>(c)}));
      solver.solve();
      model.submodels[c] = SvmSubModel{solver.alpha(), std::move(y), solver.bias()};
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return model;
}

double svm_kkt_violation(const SvmRbfModel& model, std::size_t submodel_index) {
  const auto& sub = model.submodels.at(submodel_index);
  Eigen::MatrixXd kernel = kernels::rbf_kernel(model.support, model.support, model.gamma);
  Eigen::VectorXd f = kernel * (sub.alpha.array() * sub.y.array()).matrix();
  f.array() += sub.bias;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    double margin = sub.y(i) * f(i);
    if (sub.alpha(i) <= 0.0)
      worst = std::max(worst, 1.0 - margin);
    else if (sub.alpha(i) >= model.c)
      worst = std::max(worst, margin - 1.0);
    else
      worst = std::max(worst, std::abs(margin - 1.0));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Single-hidden-layer MLP trained with Adam.

namespace {

int class_index(const std::vector<std::string>& classes, const std::string& label) {
  auto it = std::lower_bound(classes.begin(), classes.end(), label);
  return static_cast<int>(it - classes.begin());
}

}  // namespace

MlpGradients mlp_loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& x,
                                    const std::vector<int>& class_targets) {
  const Eigen::Index n = x.rows();
  const auto k = static_cast<Eigen::Index>(model.classes.size());

  Eigen::MatrixXd z = kernels::matmul(x, model.w1);
  z.rowwise() += model.b1;
  Eigen::MatrixXd h = z.cwiseMax(0.0);
  Eigen::MatrixXd logits = kernels::matmul(h, model.w2);
  logits.rowwise() += model.b2;

  // stable softmax + cross-entropy
  Eigen::MatrixXd probs(n, k);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = logits.row(i).maxCoeff();
    double denom = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) denom += std::exp(logits(i, j) - m);
    for (Eigen::Index j = 0; j < k; ++j) probs(i, j) = std::exp(logits(i, j) - m) / denom;
    loss -= std::log(std::max(probs(i, class_targets[static_cast<std::size_t>(i)]), 1e-300));
  }
  loss /= static_cast<double>(n);

  Eigen::MatrixXd dlogits = probs;
  for (Eigen::Index i = 0; i < n; ++i)
    dlogits(i, class_targets[static_cast<std::size_t>(i)]) -= 1.0;
  dlogits /= static_cast<double>(n);

  MlpGradients g;
  g.loss = loss;
  g.dw2 = kernels::crossprod(h, dlogits);
  g.db2 = dlogits.colwise().sum();
  Eigen::MatrixXd dh = kernels::matmul(dlogits, Eigen::MatrixXd(model.w2.transpose()));
  Eigen::MatrixXd dz = dh.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
  g.dw1 = kernels::crossprod(x, dz);
  g.db1 = dz.colwise().sum();
  return g;
}

MlpModel fit_mlp(const LabeledSet& set, const MlpConfig& config, std::uint64_t rng_seed) {
  set.check();
  auto classes = set.classes();
  if (classes.size() < 2) raise(ErrorCode::SingleClass, "MLP needs at least 2 classes");
  if (config.hidden < 1 || config.epochs < 1 || config.batch < 1)
    raise(ErrorCode::InvalidConfig, "MLP hyperparameters must be positive");

  const Eigen::Index n = set.coords.rows();
  const Eigen::Index d = set.coords.cols();
  const auto k = static_cast<Eigen::Index>(classes.size());

  std::vector<int> targets(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < targets.size(); ++i)
    targets[i] = class_index(classes, set.labels[i]);

  rng::Rng rng(rng_seed);
  MlpModel model;
  model.classes = classes;
  auto uniform_init = [&](Eigen::Index rows, Eigen::Index cols, double fan_in) {
    Eigen::MatrixXd m(rows, cols);
    double scale = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = (2.0 * rng.uniform() - 1.0) * scale;
    return m;
  };
  model.w1 = uniform_init(d, config.hidden, static_cast<double>(d));
  model.b1 = uniform_init(1, config.hidden, static_cast<double>(d));
  model.w2 = uniform_init(config.hidden, k, static_cast<double>(config.hidden));
  model.b2 = uniform_init(1, k, static_cast<double>(config.hidden));

  // Adam state, one slot per parameter block
  struct Adam {
    Eigen::MatrixXd m, v;
    explicit Adam(Eigen::Index rows, Eigen::Index cols)
        : m(Eigen::MatrixXd::Zero(rows, cols)), v(Eigen::MatrixXd::Zero(rows, cols)) {}
  };
  Adam aw1(d, config.hidden), ab1(1, config.hidden), aw2(config.hidden, k), ab2(1, k);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  auto adam_step = [&](Eigen::MatrixXd& param, Adam& state, const Eigen::MatrixXd& grad) {
    state.m = beta1 * state.m + (1.0 - beta1) * grad;
    state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    param -= (config.learning_rate * (state.m / bc1).array() /
              ((state.v / bc2).array().sqrt() + eps))
                 .matrix();
  };

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (Eigen::Index start = 0; start < n; start += config.batch) {
      Eigen::Index size = std::min<Eigen::Index>(config.batch, n - start);
      Eigen::MatrixXd xb(size, d);
      std::vector<int> tb(static_cast<std::size_t>(size));
      for (Eigen::Index i = 0; i < size; ++i) {
        xb.row(i) = set.coords.row(order[static_cast<std::size_t>(start + i)]);
        tb[static_cast<std::size_t>(i)] =
            targets[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
      }
      MlpGradients g = mlp_loss_and_gradients(model, xb, tb);
      ++t;
      adam_step(model.w1, aw1, g.dw1);
      Eigen::MatrixXd b1m = model.b1, b2m = model.b2;
      adam_step(b1m, ab1, g.db1);
      adam_step(b2m, ab2, g.db2);
      model.b1 = b1m;
      model.b2 = b2m;
      adam_step(model.w2, aw2, g.dw2);
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Prediction

namespace {

void check_dim(Eigen::Index got, Eigen::Index want) {
  if (got != want)
    raise(ErrorCode::DimensionMismatch, "query dimension does not match training dimension");
}

Eigen::MatrixXd centroid_decisions(const CentroidModel& m, const Eigen::MatrixXd& coords) {
  check_dim(coords.cols(), m.centroids.cols());
  return -kernels::pairwise_sqdist(coords, m.centroids);
}

Eigen::MatrixXd svm_decisions(const SvmRbfModel& m, const Eigen::MatrixXd& coords) {
  check_dim(coords.cols(), m.support.cols());
  Eigen::MatrixXd kernel = kernels::rbf_kernel(coords, m.support, m.gamma);
  Eigen::MatrixXd out(coords.rows(), static_cast<Eigen::Index>(m.submodels.size()));
  for (std::size_t c = 0; c < m.submodels.size(); ++c) {
    const auto& sub = m.submodels[c];
    Eigen::VectorXd coeff = (sub.alpha.array() * sub.y.array()).matrix();
    out.col(static_cast<Eigen::Index>(c)) = (kernel * coeff).array() + sub.bias;
  }
  return out;
}

Eigen::MatrixXd mlp_decisions(const MlpModel& m, const Eigen::MatrixXd& coords) {
  check_dim(coords.cols(), m.w1.rows());
  Eigen::MatrixXd z = kernels::matmul(coords, m.w1);
  z.rowwise() += m.b1;
  Eigen::MatrixXd logits = kernels::matmul(Eigen::MatrixXd(z.cwiseMax(0.0)), m.w2);
  logits.rowwise() += m.b2;
  return logits;
}

std::vector<std::string> argmax_labels(const Eigen::MatrixXd& decisions,
                                       const std::vector<std::string>& classes) {
  std::vector<std::string> out(static_cast<std::size_t>(decisions.rows()));
  for (Eigen::Index i = 0; i < decisions.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < decisions.cols(); ++c)
      if (decisions(i, c) > decisions(i, best)) best = c;  // ties to lowest label order
    out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

std::vector<std::string> knn_predict(const KnnModel& m, const Eigen::MatrixXd& coords) {
  check_dim(coords.cols(), m.train.cols());
  Eigen::MatrixXd d2 = kernels::pairwise_sqdist(coords, m.train);
  std::vector<std::string> out(static_cast<std::size_t>(coords.rows()));
  const int k = std::min<int>(m.k, static_cast<int>(m.train.rows()));
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m.train.rows()));
    std::iota(order.begin(), order.end(), 0);
    // neighbors by (distance, stored index): stable tie-break
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        if (d2(i, a) != d2(i, b)) return d2(i, a) < d2(i, b);
                        return a < b;
                      });
    if (k == 1) {
      out[static_cast<std::size_t>(i)] = m.labels[static_cast<std::size_t>(order[0])];
    } else {
      std::map<std::string, int> votes;
      for (int j = 0; j < k; ++j) ++votes[m.labels[static_cast<std::size_t>(order[j])]];
      auto best = votes.begin();
      for (auto it = votes.begin(); it != votes.end(); ++it)
        if (it->second > best->second) best = it;  // ties to lowest label order
      out[static_cast<std::size_t>(i)] = best->first;
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd decision_values(const ClassifierModel& model, const Eigen::MatrixXd& coords) {
  if (std::holds_alternative<CentroidModel>(model))
    return centroid_decisions(std::get<CentroidModel>(model), coords);
  if (std::holds_alternative<SvmRbfModel>(model))
    return svm_decisions(std::get<SvmRbfModel>(model), coords);
  if (std::holds_alternative<MlpModel>(model))
    return mlp_decisions(std::get<MlpModel>(model), coords);
  // kNN: negated distance to the nearest stored row per class
  const auto& m = std::get<KnnModel>(model);
  check_dim(coords.cols(), m.train.cols());
  Eigen::MatrixXd d2 = kernels::pairwise_sqdist(coords, m.train);
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(
      coords.rows(), static_cast<Eigen::Index>(m.classes.size()),
      -std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < coords.rows(); ++i)
    for (Eigen::Index j = 0; j < m.train.rows(); ++j) {
      auto c = static_cast<Eigen::Index>(
          std::lower_bound(m.classes.begin(), m.classes.end(),
                           m.labels[static_cast<std::size_t>(j)]) -
          m.classes.begin());
      out(i, c) = std::max(out(i, c), -d2(i, j));
    }
  return out;
}

std::vector<std::string> predict(const ClassifierModel& model, const Eigen::MatrixXd& coords) {
  if (std::holds_alternative<KnnModel>(model))
    return knn_predict(std::get<KnnModel>(model), coords);
  if (std::holds_alternative<CentroidModel>(model)) {
    const auto& m = std::get<CentroidModel>(model);
    return argmax_labels(centroid_decisions(m, coords), m.classes);
  }
  if (std::holds_alternative<SvmRbfModel>(model)) {
    const auto& m = std::get<SvmRbfModel>(model);
    return argmax_labels(svm_decisions(m, coords), m.classes);
  }
  const auto& m = std::get<MlpModel>(model);
  return argmax_labels(mlp_decisions(m, coords), m.classes);
}

}  // namespace ssa::classify
