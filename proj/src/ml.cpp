#include "crowdflow/ml.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "crowdflow/error.hpp"
#include "crowdflow/random.hpp"
#include "ml_internal.hpp"

namespace crowdflow::ml {
namespace {

// Index of the first maximum.
template <typename Derived>
int argmax(const Eigen::DenseBase<Derived>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

int distinct_classes(const std::vector<int>& y) { return static_cast<int>(std::set<int>(y.begin(), y.end()).size()); }

Eigen::VectorXd binary_targets(const std::vector<int>& y, int cls) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) t(static_cast<Eigen::Index>(i)) = y[i] == cls ? 1.0 : -1.0;
  return t;
}

// ---- SVM -------------------------------------------------------------------

double kernel_value(const SvmParams& p, double gamma, const Eigen::Ref<const Eigen::RowVectorXd>& a,
                    const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  switch (p.kernel) {
    case Kernel::kLinear:
      return a.dot(b);
    case Kernel::kRbf:
      return std::exp(-gamma * (a - b).squaredNorm());
    case Kernel::kPoly:
      return std::pow(gamma * a.dot(b) + p.coef0, p.degree);
  }
  return 0.0;
}

// Simplified SMO with the second multiplier drawn from a seeded sweep.
Eigen::VectorXd smo_train(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, const SvmParams& p, std::uint64_t seed,
                          double& bias) {
  const Eigen::Index n = k.rows();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  double b = 0.0;
  Rng rng(seed);
  const std::vector<std::size_t> sweep = rng.permutation(static_cast<std::size_t>(n));
  std::size_t cursor = 0;
  auto decision = [&](Eigen::Index i) { return (alpha.array() * y.array()).matrix().dot(k.col(i)) + b; };

  int passes = 0;
  for (int iter = 0; passes < p.max_passes && iter < p.max_iter; ++iter) {
    int changed = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ei = decision(i) - y(i);
      if (!((y(i) * ei < -p.tol && alpha(i) < p.c) || (y(i) * ei > p.tol && alpha(i) > 0.0))) continue;
      Eigen::Index j = static_cast<Eigen::Index>(sweep[cursor++ % sweep.size()]);
      if (j == i) j = static_cast<Eigen::Index>(sweep[cursor++ % sweep.size()]);
      if (j == i) continue;
      const double ej = decision(j) - y(j);
      const double ai_old = alpha(i);
      const double aj_old = alpha(j);
      double lo, hi;
      if (y(i) != y(j)) {
        lo = std::max(0.0, aj_old - ai_old);
        hi = std::min(p.c, p.c + aj_old - ai_old);
      } else {
        lo = std::max(0.0, ai_old + aj_old - p.c);
        hi = std::min(p.c, ai_old + aj_old);
      }
      if (lo >= hi) continue;
      const double eta = 2.0 * k(i, j) - k(i, i) - k(j, j);
      if (eta >= 0.0) continue;
      double aj = std::clamp(aj_old - y(j) * (ei - ej) / eta, lo, hi);
      if (std::abs(aj - aj_old) < 1e-5) continue;
      const double ai = ai_old + y(i) * y(j) * (aj_old - aj);
      alpha(i) = ai;
      alpha(j) = aj;
      const double b1 = b - ei - y(i) * (ai - ai_old) * k(i, i) - y(j) * (aj - aj_old) * k(i, j);
      const double b2 = b - ej - y(i) * (ai - ai_old) * k(i, j) - y(j) * (aj - aj_old) * k(j, j);
      if (ai > 0.0 && ai < p.c) {
        b = b1;
      } else if (aj > 0.0 && aj < p.c) {
        b = b2;
      } else {
        b = 0.5 * (b1 + b2);
      }
      ++changed;
    }
    passes = changed == 0 ? passes + 1 : 0;
  }
  bias = b;
  return alpha;
}

SvmModel fit_svm(const SvmParams& p, const Dataset& d, std::uint64_t seed) {
  SvmModel m;
  m.standardizer = Standardizer::fit(d.x);
  const Eigen::MatrixXd xs = m.standardizer.apply(d.x);
  m.gamma = p.gamma > 0.0 ? p.gamma : 1.0 / static_cast<double>(d.feature_count());
  const Eigen::Index n = xs.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) k(i, j) = k(j, i) = kernel_value(p, m.gamma, xs.row(i), xs.row(j));
  }
  std::vector<std::size_t> used;
  std::vector<std::ptrdiff_t> slot(static_cast<std::size_t>(n), -1);
  for (int c = 0; c < d.class_count(); ++c) {
    const Eigen::VectorXd t = binary_targets(d.y, c);
    SvmMachine machine;
    const Eigen::VectorXd alpha = smo_train(k, t, p, derive_seed(seed, static_cast<std::uint64_t>(c)), machine.bias);
    std::vector<double> coef;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (alpha(i) <= 0.0) continue;
      auto& s = slot[static_cast<std::size_t>(i)];
      if (s < 0) {
        s = static_cast<std::ptrdiff_t>(used.size());
        used.push_back(static_cast<std::size_t>(i));
      }
      machine.support.push_back(static_cast<std::size_t>(s));
      coef.push_back(alpha(i) * t(i));
    }
    machine.coef = Eigen::Map<Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
    m.machines.push_back(std::move(machine));
  }
  m.vectors.resize(static_cast<Eigen::Index>(used.size()), xs.cols());
  for (std::size_t r = 0; r < used.size(); ++r) {
    m.vectors.row(static_cast<Eigen::Index>(r)) = xs.row(static_cast<Eigen::Index>(used[r]));
  }
  return m;
}

// ---- linear families -------------------------------------------------------

LinearModel fit_logreg(const LogRegParams& p, const Dataset& d) {
  LinearModel m;
  m.standardizer = Standardizer::fit(d.x);
  const Eigen::MatrixXd xs = m.standardizer.apply(d.x);
  m.weights = Eigen::MatrixXd::Zero(d.class_count(), d.feature_count());
  m.bias = Eigen::VectorXd::Zero(d.class_count());
  for (int iter = 0; iter < p.max_iter; ++iter) {
    const LossAndGradient lg = logreg_loss(xs, d.y, d.class_count(), m.weights, m.bias, p.l2);
    m.weights -= p.learning_rate * lg.grad_w;
    m.bias -= p.learning_rate * lg.grad_b;
  }
  return m;
}

LinearModel fit_perceptron(const PerceptronParams& p, const Dataset& d, std::uint64_t seed) {
  LinearModel m;
  m.standardizer = Standardizer::fit(d.x);
  const Eigen::MatrixXd xs = m.standardizer.apply(d.x);
  m.weights = Eigen::MatrixXd::Zero(d.class_count(), d.feature_count());
  m.bias = Eigen::VectorXd::Zero(d.class_count());
  Rng rng(seed);
  const std::vector<std::size_t> order = rng.permutation(static_cast<std::size_t>(xs.rows()));
  for (int c = 0; c < d.class_count(); ++c) {
    for (int epoch = 0; epoch < p.epochs; ++epoch) {
      for (std::size_t i : order) {
        const auto r = static_cast<Eigen::Index>(i);
        const double t = d.y[i] == c ? 1.0 : -1.0;
        if (t * (m.weights.row(c).dot(xs.row(r)) + m.bias(c)) <= 0.0) {
          m.weights.row(c) += p.learning_rate * t * xs.row(r);
          m.bias(c) += p.learning_rate * t;
        }
      }
    }
  }
  return m;
}

LinearModel fit_sgd(const SgdParams& p, const Dataset& d, std::uint64_t seed) {
  LinearModel m;
  m.standardizer = Standardizer::fit(d.x);
  const Eigen::MatrixXd xs = m.standardizer.apply(d.x);
  m.weights = Eigen::MatrixXd::Zero(d.class_count(), d.feature_count());
  m.bias = Eigen::VectorXd::Zero(d.class_count());
  Rng rng(seed);
  for (int epoch = 1; epoch <= p.epochs; ++epoch) {
    const double lr = p.learning_rate / std::sqrt(static_cast<double>(epoch));
    const std::vector<std::size_t> order = rng.permutation(static_cast<std::size_t>(xs.rows()));
    for (std::size_t i : order) {
      const auto r = static_cast<Eigen::Index>(i);
      for (int c = 0; c < d.class_count(); ++c) {
        const double t = d.y[i] == c ? 1.0 : -1.0;
        const double margin = t * (m.weights.row(c).dot(xs.row(r)) + m.bias(c));
        m.weights.row(c) *= 1.0 - lr * p.alpha;
        if (margin < 1.0) {
          m.weights.row(c) += lr * t * xs.row(r);
          m.bias(c) += lr * t;
        }
      }
    }
  }
  return m;
}

// ---- KNN / GNB -------------------------------------------------------------

KnnModel fit_knn(const Dataset& d) {
  KnnModel m;
  m.standardizer = Standardizer::fit(d.x);
  m.x = m.standardizer.apply(d.x);
  m.y = d.y;
  return m;
}

GnbModel fit_gnb(const GnbParams& p, const Dataset& d) {
  const int classes = d.class_count();
  const Eigen::Index f = d.feature_count();
  GnbModel m;
  m.mean = Eigen::MatrixXd::Zero(classes, f);
  m.var = Eigen::MatrixXd::Ones(classes, f);
  m.log_prior = Eigen::VectorXd::Constant(classes, std::numeric_limits<double>::lowest());
  const Eigen::RowVectorXd overall_mean = d.x.colwise().mean();
  const double max_var = (d.x.rowwise() - overall_mean).array().square().colwise().mean().maxCoeff();
  const double eps = p.var_smoothing * (max_var > 0.0 ? max_var : 1.0);
  for (int c = 0; c < classes; ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      if (d.y[i] == c) rows.push_back(i);
    }
    if (rows.empty()) continue;
    const Eigen::MatrixXd xc = d.subset(rows).x;
    const Eigen::RowVectorXd mu = xc.colwise().mean();
    m.mean.row(c) = mu;
    m.var.row(c) = (xc.rowwise() - mu).array().square().colwise().mean().matrix();
    m.var.row(c).array() += eps;
    m.log_prior(c) = std::log(static_cast<double>(rows.size()) / static_cast<double>(d.size()));
  }
  return m;
}

// ---- prediction ------------------------------------------------------------

struct Predictor {
  const TrainedModel& model;
  const Eigen::Ref<const Eigen::RowVectorXd>& row;

  int operator()(const LinearModel& m) const {
    const Eigen::RowVectorXd xs = m.standardizer.apply(row);
    const Eigen::VectorXd scores = m.weights * xs.transpose() + m.bias;
    return argmax(scores);
  }

  int operator()(const SvmModel& m) const {
    const auto& p = std::get<SvmParams>(model.spec.params);
    const Eigen::RowVectorXd xs = m.standardizer.apply(row);
    Eigen::VectorXd kv(m.vectors.rows());
    for (Eigen::Index i = 0; i < m.vectors.rows(); ++i) kv(i) = kernel_value(p, m.gamma, m.vectors.row(i), xs);
    Eigen::VectorXd scores(static_cast<Eigen::Index>(m.machines.size()));
    for (std::size_t c = 0; c < m.machines.size(); ++c) {
      const SvmMachine& mc = m.machines[c];
      double s = mc.bias;
      for (std::size_t k = 0; k < mc.support.size(); ++k) {
        s += mc.coef(static_cast<Eigen::Index>(k)) * kv(static_cast<Eigen::Index>(mc.support[k]));
      }
      scores(static_cast<Eigen::Index>(c)) = s;
    }
    return argmax(scores);
  }

  int operator()(const KnnModel& m) const {
    const auto& p = std::get<KnnParams>(model.spec.params);
    const Eigen::RowVectorXd xs = m.standardizer.apply(row);
    const Eigen::VectorXd dist = (m.x.rowwise() - xs).rowwise().squaredNorm();
    std::vector<std::size_t> idx(static_cast<std::size_t>(dist.size()));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t k = std::min(idx.size(), static_cast<std::size_t>(p.k));
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double da = dist(static_cast<Eigen::Index>(a));
                        const double db = dist(static_cast<Eigen::Index>(b));
                        return da != db ? da < db : a < b;
                      });
    Eigen::VectorXi votes = Eigen::VectorXi::Zero(model.class_count());
    for (std::size_t i = 0; i < k; ++i) ++votes(m.y[idx[i]]);
    return argmax(votes);
  }

  int operator()(const GnbModel& m) const {
    Eigen::VectorXd scores(m.mean.rows());
    for (Eigen::Index c = 0; c < m.mean.rows(); ++c) {
      if (m.log_prior(c) == std::numeric_limits<double>::lowest()) {
        scores(c) = -std::numeric_limits<double>::infinity();
        continue;
      }
      const Eigen::ArrayXd diff = (row - m.mean.row(c)).array();
      const Eigen::ArrayXd var = m.var.row(c).array();
      scores(c) = m.log_prior(c) - 0.5 * ((2.0 * M_PI * var).log() + diff.square() / var).sum();
    }
    return argmax(scores);
  }

  int operator()(const Tree& t) const { return t.predict(row); }

  int operator()(const ForestModel& f) const {
    Eigen::VectorXi votes = Eigen::VectorXi::Zero(model.class_count());
    for (const Tree& t : f.trees) ++votes(t.predict(row));
    return argmax(votes);
  }
};

}  // namespace

// ---- datasets --------------------------------------------------------------

void Dataset::validate() const {
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw ParamError("dataset label count does not match rows");
  for (int label : y) {
    if (label < 0 || label >= class_count()) throw ParamError("dataset label out of range");
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.class_names = class_names;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  out.y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    out.y.push_back(y[rows[i]]);
  }
  return out;
}

Dataset dataset_from_rows(const std::vector<BlockFeatureRow>& rows) {
  Dataset d;
  d.class_names.assign(kMotionClassNames.begin(), kMotionClassNames.end());
  std::vector<const BlockFeatureRow*> labeled;
  for (const BlockFeatureRow& r : rows) {
    if (r.label) labeled.push_back(&r);
  }
  const Eigen::Index width = labeled.empty() ? 0 : static_cast<Eigen::Index>(labeled.front()->features.size());
  d.x.resize(static_cast<Eigen::Index>(labeled.size()), width);
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (static_cast<Eigen::Index>(labeled[i]->features.size()) != width) {
      throw ParamError("feature rows have inconsistent widths");
    }
    d.x.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(labeled[i]->features.data(), width);
    d.y.push_back(static_cast<int>(*labeled[i]->label));
  }
  return d;
}

Split split_dataset(const Dataset& d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParamError("train fraction must be in (0, 1)");
  const auto n = static_cast<std::size_t>(d.size());
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n < 2 || n_train == 0 || n_train >= n) throw ParamError("split leaves an empty train or test set");
  Rng rng(seed);
  const std::vector<std::size_t> order = rng.permutation(n);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {d.subset(train), d.subset(test)};
}

Split split_dataset_by_span(const Dataset& d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParamError("train fraction must be in (0, 1)");
  const auto n = static_cast<std::size_t>(d.size());
  std::vector<std::vector<std::size_t>> spans;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || d.y[i] != d.y[i - 1]) spans.emplace_back();
    spans.back().push_back(i);
  }
  const auto target = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  Rng rng(seed);
  const std::vector<std::size_t> order = rng.permutation(spans.size());
  std::vector<std::size_t> train, test;
  for (std::size_t s : order) {
    auto& dst = train.size() < target ? train : test;
    dst.insert(dst.end(), spans[s].begin(), spans[s].end());
  }
  if (train.empty() || test.empty()) throw ParamError("span split leaves an empty train or test set");
  return {d.subset(train), d.subset(test)};
}

// ---- specs -----------------------------------------------------------------

std::string family_name(Family f) {
  static const char* names[] = {"logreg", "svm", "knn", "gnb", "perceptron", "sgd", "dtree", "rforest"};
  return names[static_cast<int>(f)];
}

Family parse_family(const std::string& name) {
  for (int i = 0; i < 8; ++i) {
    if (family_name(static_cast<Family>(i)) == name) return static_cast<Family>(i);
  }
  throw ParamError("unknown model family '" + name + "'");
}

std::string kernel_name(Kernel k) {
  switch (k) {
    case Kernel::kLinear:
      return "linear";
    case Kernel::kRbf:
      return "rbf";
    case Kernel::kPoly:
      return "poly";
  }
  return "?";
}

Kernel parse_kernel(const std::string& name) {
  if (name == "linear") return Kernel::kLinear;
  if (name == "rbf") return Kernel::kRbf;
  if (name == "poly") return Kernel::kPoly;
  throw ParamError("unknown svm kernel '" + name + "'");
}

ModelSpec default_spec(Family f, std::uint64_t seed) {
  ModelSpec s;
  s.seed = seed;
  switch (f) {
    case Family::kLogReg:
      s.params = LogRegParams{};
      break;
    case Family::kSvm:
      s.params = SvmParams{};
      break;
    case Family::kKnn:
      s.params = KnnParams{};
      break;
    case Family::kGnb:
      s.params = GnbParams{};
      break;
    case Family::kPerceptron:
      s.params = PerceptronParams{};
      break;
    case Family::kSgd:
      s.params = SgdParams{};
      break;
    case Family::kDecisionTree:
      s.params = TreeParams{};
      break;
    case Family::kRandomForest:
      s.params = ForestParams{};
      break;
  }
  return s;
}

namespace {

void validate_tree(const TreeParams& t) {
  if (t.max_depth < 1) throw ParamError("max_depth must be >= 1");
  if (t.min_samples_split < 2) throw ParamError("min_samples_split must be >= 2");
  if (t.min_samples_leaf < 1) throw ParamError("min_samples_leaf must be >= 1");
}

struct SpecValidator {
  void operator()(const LogRegParams& p) const {
    if (!(p.learning_rate > 0.0)) throw ParamError("learning_rate must be > 0");
    if (p.l2 < 0.0) throw ParamError("l2 must be >= 0");
    if (p.max_iter < 1) throw ParamError("max_iter must be >= 1");
  }
  void operator()(const SvmParams& p) const {
    if (!(p.c > 0.0)) throw ParamError("svm C must be > 0");
    if (p.gamma < 0.0) throw ParamError("svm gamma must be >= 0");
    if (p.degree < 1) throw ParamError("svm degree must be >= 1");
    if (p.max_passes < 1 || p.max_iter < 1) throw ParamError("svm max_passes and max_iter must be >= 1");
  }
  void operator()(const KnnParams& p) const {
    if (p.k < 1) throw ParamError("knn k must be >= 1");
  }
  void operator()(const GnbParams& p) const {
    if (p.var_smoothing < 0.0) throw ParamError("var_smoothing must be >= 0");
  }
  void operator()(const PerceptronParams& p) const {
    if (!(p.learning_rate > 0.0)) throw ParamError("learning_rate must be > 0");
    if (p.epochs < 1) throw ParamError("epochs must be >= 1");
  }
  void operator()(const SgdParams& p) const {
    if (!(p.learning_rate > 0.0)) throw ParamError("learning_rate must be > 0");
    if (p.alpha < 0.0) throw ParamError("alpha must be >= 0");
    if (p.epochs < 1) throw ParamError("epochs must be >= 1");
  }
  void operator()(const TreeParams& p) const { validate_tree(p); }
  void operator()(const ForestParams& p) const {
    validate_tree(p.tree);
    if (p.n_trees < 1) throw ParamError("n_trees must be >= 1");
    if (p.max_features < 0) throw ParamError("max_features must be >= 0");
  }
};

}  // namespace

void ModelSpec::validate() const { std::visit(SpecValidator{}, params); }

// ---- standardization -------------------------------------------------------

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  const Eigen::Index f = x.cols();
  s.mean = Eigen::RowVectorXd::Zero(f);
  s.scale = Eigen::RowVectorXd::Ones(f);
  if (x.rows() == 0) return s;
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::RowVectorXd sd = (x.rowwise() - mu).array().square().colwise().mean().sqrt().matrix();
  for (Eigen::Index j = 0; j < f; ++j) {
    if (sd(j) > 0.0) {
      s.mean(j) = mu(j);
      s.scale(j) = sd(j);
    }
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

// ---- fit / predict / evaluate ----------------------------------------------

TrainedModel fit(const ModelSpec& spec, const Dataset& train) {
  spec.validate();
  train.validate();
  if (train.size() == 0) throw ParamError("fit: empty training set");
  if (train.class_count() < 1) throw ParamError("fit: dataset has no classes");
  const Family family = spec.family();
  const bool tolerates_one_class = family == Family::kKnn || family == Family::kGnb;
  if (!tolerates_one_class && distinct_classes(train.y) < 2) {
    throw ParamError("fit: " + family_name(family) + " needs at least 2 classes in the training set");
  }

  TrainedModel m;
  m.spec = spec;
  m.class_names = train.class_names;
  m.feature_count = train.feature_count();
  switch (family) {
    case Family::kLogReg:
      m.parameters = fit_logreg(std::get<LogRegParams>(spec.params), train);
      break;
    case Family::kSvm:
      m.parameters = fit_svm(std::get<SvmParams>(spec.params), train, spec.seed);
      break;
    case Family::kKnn:
      m.parameters = fit_knn(train);
      break;
    case Family::kGnb:
      m.parameters = fit_gnb(std::get<GnbParams>(spec.params), train);
      break;
    case Family::kPerceptron:
      m.parameters = fit_perceptron(std::get<PerceptronParams>(spec.params), train, spec.seed);
      break;
    case Family::kSgd:
      m.parameters = fit_sgd(std::get<SgdParams>(spec.params), train, spec.seed);
      break;
    case Family::kDecisionTree:
    case Family::kRandomForest:
      m.parameters = fit_trees(spec, train);
      break;
  }
  return m;
}

int predict_row(const TrainedModel& m, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() != m.feature_count) {
    throw ParamError("predict: row has " + std::to_string(row.size()) + " features, model expects " +
                     std::to_string(m.feature_count));
  }
  return std::visit(Predictor{m, row}, m.parameters);
}

std::vector<int> predict(const TrainedModel& m, const Eigen::MatrixXd& rows) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.push_back(predict_row(m, rows.row(i)));
  return out;
}

EvalReport evaluate(const TrainedModel& m, const Dataset& test) {
  test.validate();
  if (test.feature_count() != m.feature_count) throw ParamError("evaluate: feature width mismatch");
  EvalReport r;
  r.class_names = m.class_names;
  r.n_test = static_cast<std::size_t>(test.size());
  const int classes = std::max(m.class_count(), test.class_count());
  r.confusion = Eigen::MatrixXi::Zero(classes, classes);
  const std::vector<int> pred = predict(m, test.x);
  for (std::size_t i = 0; i < pred.size(); ++i) ++r.confusion(test.y[i], pred[i]);
  r.accuracy = r.n_test ? static_cast<double>(r.confusion.trace()) / static_cast<double>(r.n_test) : 0.0;
  return r;
}

std::string confusion_table(const EvalReport& r) {
  std::ostringstream out;
  std::size_t w = 9;
  for (const auto& n : r.class_names) w = std::max(w, n.size() + 1);
  out << "accuracy " << std::to_string(r.accuracy) << " (n_test " << r.n_test << ")\n";
  out << std::string(w, ' ');
  for (const auto& n : r.class_names) out << std::string(w - n.size(), ' ') << n;
  out << "\n";
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    const std::string name = static_cast<std::size_t>(i) < r.class_names.size() ? r.class_names[static_cast<std::size_t>(i)] : std::to_string(i);
    out << name << std::string(w - name.size(), ' ');
    for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) {
      const std::string v = std::to_string(r.confusion(i, j));
      out << std::string(w - v.size(), ' ') << v;
    }
    out << "\n";
  }
  return out.str();
}

// ---- logistic regression internals ----------------------------------------

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  return p.array().colwise() / p.rowwise().sum().array();
}

LossAndGradient logreg_loss(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                            const Eigen::MatrixXd& w, const Eigen::VectorXd& b, double l2) {
  if (w.rows() != classes || b.size() != classes) throw ParamError("logreg_loss: parameter shape mismatch");
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd logits = (x * w.transpose()).rowwise() + b.transpose();
  const Eigen::RowVectorXd maxes = logits.rowwise().maxCoeff().transpose();
  Eigen::MatrixXd p = softmax(logits);
  LossAndGradient out;
  double ce = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int yi = y[static_cast<std::size_t>(i)];
    const double lse = maxes(i) + std::log((logits.row(i).array() - maxes(i)).exp().sum());
    ce += lse - logits(i, yi);
    p(i, yi) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss = ce * inv_n + 0.5 * l2 * w.squaredNorm();
  out.grad_w = p.transpose() * x * inv_n + l2 * w;
  out.grad_b = p.colwise().sum().transpose() * inv_n;
  return out;
}

double gradient_check(const ModelSpec& spec, const Dataset& train) {
  train.validate();
  const auto* lr = std::get_if<LogRegParams>(&spec.params);
  const double l2 = lr ? lr->l2 : 1e-3;
  const Standardizer s = Standardizer::fit(train.x);
  const Eigen::MatrixXd xs = s.apply(train.x);
  const int classes = train.class_count();
  Rng rng(spec.seed);
  Eigen::MatrixXd w(classes, train.feature_count());
  Eigen::VectorXd b(classes);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = 0.1 * rng.normal();
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.1 * rng.normal();

  const LossAndGradient analytic = logreg_loss(xs, train.y, classes, w, b, l2);
  constexpr double h = 1e-5;
  double worst = 0.0;
  auto relative = [](double a, double n) {
    const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
    return std::abs(a - n) / denom;
  };
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Eigen::MatrixXd wp = w, wm = w;
    wp.data()[i] += h;
    wm.data()[i] -= h;
    const double numeric = (logreg_loss(xs, train.y, classes, wp, b, l2).loss -
                            logreg_loss(xs, train.y, classes, wm, b, l2).loss) / (2.0 * h);
    worst = std::max(worst, relative(analytic.grad_w.data()[i], numeric));
  }
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    Eigen::VectorXd bp = b, bm = b;
    bp(i) += h;
    bm(i) -= h;
    const double numeric = (logreg_loss(xs, train.y, classes, w, bp, l2).loss -
                            logreg_loss(xs, train.y, classes, w, bm, l2).loss) / (2.0 * h);
    worst = std::max(worst, relative(analytic.grad_b(i), numeric));
  }
  return worst;
}

}  // namespace crowdflow::ml
