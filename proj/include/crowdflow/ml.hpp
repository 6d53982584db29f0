#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "crowdflow/blockfeat.hpp"

namespace crowdflow::ml {

struct Dataset {
  Eigen::MatrixXd x;                    // one row per sample
  std::vector<int> y;                   // class ids in [0, class_names.size())
  std::vector<std::string> class_names;

  Eigen::Index size() const { return x.rows(); }
  Eigen::Index feature_count() const { return x.cols(); }
  int class_count() const { return static_cast<int>(class_names.size()); }

  void validate() const;
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

// Labeled rows only, with the four motion classes as class ids.
Dataset dataset_from_rows(const std::vector<BlockFeatureRow>& rows);

struct Split {
  Dataset train;
  Dataset test;
};

// Seeded shuffle; train size = round(fraction * n).
Split split_dataset(const Dataset& d, double train_fraction, std::uint64_t seed);

// Keeps runs of consecutive rows with the same label together.
Split split_dataset_by_span(const Dataset& d, double train_fraction, std::uint64_t seed);

// ---- model specification ---------------------------------------------------

enum class Family { kLogReg, kSvm, kKnn, kGnb, kPerceptron, kSgd, kDecisionTree, kRandomForest };

std::string family_name(Family f);
Family parse_family(const std::string& name);

struct LogRegParams {
  double learning_rate = 0.1;
  double l2 = 1e-3;
  int max_iter = 200;
};

enum class Kernel { kLinear, kRbf, kPoly };

std::string kernel_name(Kernel k);
Kernel parse_kernel(const std::string& name);

struct SvmParams {
  Kernel kernel = Kernel::kRbf;
  double c = 1.0;
  double gamma = 0.0;  // 0 selects 1 / feature_count
  int degree = 3;
  double coef0 = 1.0;
  double tol = 1e-3;
  int max_passes = 20;
  int max_iter = 200;  // hard cap on full sweeps
};

struct KnnParams {
  int k = 5;
};

struct GnbParams {
  double var_smoothing = 1e-9;
};

struct PerceptronParams {
  double learning_rate = 1.0;
  int epochs = 100;
};

struct SgdParams {
  double learning_rate = 0.01;
  double alpha = 1e-4;  // L2
  int epochs = 100;
};

enum class Criterion { kGini, kEntropy };

struct TreeParams {
  Criterion criterion = Criterion::kGini;
  int max_depth = 12;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
};

struct ForestParams {
  TreeParams tree;
  int n_trees = 100;
  bool bootstrap = true;
  int max_features = 0;  // 0 selects floor(sqrt(feature_count))
};

using Hyperparameters = std::variant<LogRegParams, SvmParams, KnnParams, GnbParams, PerceptronParams, SgdParams,
                                     TreeParams, ForestParams>;

struct ModelSpec {
  Hyperparameters params;
  std::uint64_t seed = 42;

  Family family() const { return static_cast<Family>(params.index()); }
  void validate() const;
};

// Default hyperparameters for a family.
ModelSpec default_spec(Family f, std::uint64_t seed = 42);

// ---- learned state ---------------------------------------------------------

// Per-feature (x - mean) / std; std 0 features pass through raw.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

// Linear scores: x_std * weights^T + bias.
struct LinearModel {
  Standardizer standardizer;
  Eigen::MatrixXd weights;  // classes x features
  Eigen::VectorXd bias;
};

struct SvmMachine {
  Eigen::VectorXd coef;              // alpha_i * y_i of support vectors
  std::vector<std::size_t> support;  // rows into SvmModel::vectors
  double bias = 0.0;
};

struct SvmModel {
  Standardizer standardizer;
  double gamma = 0.0;
  Eigen::MatrixXd vectors;  // union of support vectors, standardized
  std::vector<SvmMachine> machines;  // one per class
};

struct KnnModel {
  Standardizer standardizer;
  Eigen::MatrixXd x;
  std::vector<int> y;
};

struct GnbModel {
  Eigen::MatrixXd mean;  // classes x features
  Eigen::MatrixXd var;
  Eigen::VectorXd log_prior;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;  // majority class
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

struct ForestModel {
  std::vector<Tree> trees;
};

using LearnedParameters = std::variant<LinearModel, SvmModel, KnnModel, GnbModel, Tree, ForestModel>;

// Split a model was trained under, so evaluation can recover the held-out rows.
struct TrainingSplit {
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
  bool by_span = false;
};

struct TrainedModel {
  ModelSpec spec;
  std::optional<TrainingSplit> split;
  std::vector<std::string> class_names;
  Eigen::Index feature_count = 0;
  LearnedParameters parameters;

  int class_count() const { return static_cast<int>(class_names.size()); }
};

TrainedModel fit(const ModelSpec& spec, const Dataset& train);

int predict_row(const TrainedModel& m, const Eigen::Ref<const Eigen::RowVectorXd>& row);
std::vector<int> predict(const TrainedModel& m, const Eigen::MatrixXd& rows);

struct EvalReport {
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;  // rows = true class, cols = predicted
  std::size_t n_test = 0;
  std::vector<std::string> class_names;
};

EvalReport evaluate(const TrainedModel& m, const Dataset& test);

std::string report_json(const EvalReport& r, const std::string& family);
std::string confusion_table(const EvalReport& r);

// ---- logistic regression internals ----------------------------------------

// Row-wise numerically stable softmax.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits);

// Mean cross-entropy + (l2 / 2) * ||W||^2 on standardized inputs, with the
// analytic gradient.
struct LossAndGradient {
  double loss = 0.0;
  Eigen::MatrixXd grad_w;
  Eigen::VectorXd grad_b;
};

LossAndGradient logreg_loss(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                            const Eigen::MatrixXd& w, const Eigen::VectorXd& b, double l2);

// Analytic vs central-difference gradient (h = 1e-5) at a seeded random
// parameter point; returns the max relative error over all parameters.
double gradient_check(const ModelSpec& spec, const Dataset& train);

// ---- trees -----------------------------------------------------------------

double impurity(const std::vector<int>& class_counts, Criterion c);

// Grows a CART tree on the given rows (duplicates allowed). max_features <
// feature_count draws a feature subset at every split from rng_seed.
Tree grow_tree(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes, const std::vector<std::size_t>& rows,
               const TreeParams& p, int max_features, std::uint64_t rng_seed);

// ---- persistence -----------------------------------------------------------

std::string model_to_json(const TrainedModel& m);
TrainedModel model_from_json(const std::string& text);

}  // namespace crowdflow::ml
