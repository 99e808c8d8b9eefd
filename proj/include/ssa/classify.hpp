#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace ssa::classify {

struct LabeledSet {
  Eigen::MatrixXd coords;           // n x d
  std::vector<std::string> labels;  // size n, all non-empty

  void check() const;
  std::vector<std::string> classes() const;  // sorted distinct labels
};

// Resample every minority class with replacement up to the majority class
// count; the majority class is untouched. Output rows are shuffled
// deterministically.
LabeledSet oversample(const LabeledSet& set, std::uint64_t rng_seed);

struct CentroidModel {
  std::vector<std::string> classes;
  Eigen::MatrixXd centroids;  // classes x d
};

struct KnnModel {
  int k = 1;
  Eigen::MatrixXd train;
  std::vector<std::string> labels;
  std::vector<std::string> classes;
};

struct SvmSubModel {
  Eigen::VectorXd alpha;  // dual coefficients, 0 <= alpha_i <= C
  Eigen::VectorXd y;      // +-1 per training row
  double bias = 0.0;
};

struct SvmRbfModel {
  std::vector<std::string> classes;
  Eigen::MatrixXd support;  // training rows in canonical order
  double gamma = 1.0;
  double c = 1.0;
  std::vector<SvmSubModel> submodels;  // one-vs-rest, per class
};

struct MlpModel {
  std::vector<std::string> classes;
  Eigen::MatrixXd w1;       // d x hidden
  Eigen::RowVectorXd b1;    // hidden
  Eigen::MatrixXd w2;       // hidden x classes
  Eigen::RowVectorXd b2;    // classes
};

using ClassifierModel = std::variant<CentroidModel, KnnModel, SvmRbfModel, MlpModel>;

CentroidModel fit_centroid(const LabeledSet& set);
KnnModel fit_knn(const LabeledSet& set, int k = 1);

struct SvmRbfConfig {
  double c = 1.0;
  double gamma = 0.0;  // 0 = auto: 1 / (d * mean feature variance)
  double kkt_tolerance = 1e-3;
};

// One-vs-rest binary SVMs trained by sequential minimal optimization. Rows
// are processed in a canonical order internal to the trainer, so the result
// does not depend on training-row order. Pair updates are capped at
// 10 * n * #classes per sub-model.
SvmRbfModel fit_svm_rbf(const LabeledSet& set, const SvmRbfConfig& config,
                        std::uint64_t rng_seed);

// Worst KKT violation of a trained sub-model; used by tests and asserted to
// stay within the configured tolerance at termination.
double svm_kkt_violation(const SvmRbfModel& model, std::size_t submodel_index);

struct MlpConfig {
  int hidden = 200;
  int epochs = 5;
  int batch = 32;
  double learning_rate = 1e-3;
};

// Single hidden layer with ReLU, softmax output, cross-entropy loss, Adam
// updates (beta1 0.9, beta2 0.999, eps 1e-8). Weights and biases start from
// a seeded uniform draw scaled by 1/sqrt(fan_in); batches reshuffle per epoch
// from the same seed stream.
MlpModel fit_mlp(const LabeledSet& set, const MlpConfig& config, std::uint64_t rng_seed);

// Flattened-parameter view of the MLP loss; the finite-difference tests drive
// gradients through this surface.
struct MlpGradients {
  double loss = 0.0;
  Eigen::MatrixXd dw1;
  Eigen::RowVectorXd db1;
  Eigen::MatrixXd dw2;
  Eigen::RowVectorXd db2;
};

MlpGradients mlp_loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& x,
                                    const std::vector<int>& class_targets);

std::vector<std::string> predict(const ClassifierModel& model, const Eigen::MatrixXd& coords);

// Per-class decision values (one-vs-rest decision for SVM, logits for MLP,
// negated distances otherwise); rows align with coords, columns with the
// model's class order.
Eigen::MatrixXd decision_values(const ClassifierModel& model, const Eigen::MatrixXd& coords);

}  // namespace ssa::classify
