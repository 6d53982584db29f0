#include <json.hpp>

#include "crowdflow/error.hpp"
#include "crowdflow/ml.hpp"

namespace crowdflow::ml {
namespace {

using nlohmann::json;

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Eigen::RowVectorXd& v) { return to_json(Eigen::VectorXd(v.transpose())); }

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != static_cast<std::size_t>(cols)) throw DataError("model file: matrix row has wrong width");
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = j[i][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json standardizer_json(const Standardizer& s) { return {{"mean", to_json(s.mean)}, {"scale", to_json(s.scale)}}; }

Standardizer standardizer_from(const json& j) {
  return {vector_from(j.at("mean")).transpose(), vector_from(j.at("scale")).transpose()};
}

std::string criterion_name(Criterion c) { return c == Criterion::kGini ? "gini" : "entropy"; }

Criterion parse_criterion(const std::string& s) {
  if (s == "gini") return Criterion::kGini;
  if (s == "entropy") return Criterion::kEntropy;
  throw DataError("unknown tree criterion '" + s + "'");
}

json tree_params_json(const TreeParams& p) {
  return {{"criterion", criterion_name(p.criterion)},
          {"max_depth", p.max_depth},
          {"min_samples_split", p.min_samples_split},
          {"min_samples_leaf", p.min_samples_leaf}};
}

TreeParams tree_params_from(const json& j) {
  TreeParams p;
  p.criterion = parse_criterion(j.at("criterion").get<std::string>());
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_split = j.at("min_samples_split").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  return p;
}

struct HyperparameterWriter {
  json operator()(const LogRegParams& p) const {
    return {{"learning_rate", p.learning_rate}, {"l2", p.l2}, {"max_iter", p.max_iter}};
  }
  json operator()(const SvmParams& p) const {
    return {{"kernel", kernel_name(p.kernel)}, {"c", p.c},     {"gamma", p.gamma},           {"degree", p.degree},
            {"coef0", p.coef0},               {"tol", p.tol}, {"max_passes", p.max_passes}, {"max_iter", p.max_iter}};
  }
  json operator()(const KnnParams& p) const { return {{"k", p.k}}; }
  json operator()(const GnbParams& p) const { return {{"var_smoothing", p.var_smoothing}}; }
  json operator()(const PerceptronParams& p) const {
    return {{"learning_rate", p.learning_rate}, {"epochs", p.epochs}};
  }
  json operator()(const SgdParams& p) const {
    return {{"learning_rate", p.learning_rate}, {"alpha", p.alpha}, {"epochs", p.epochs}};
  }
  json operator()(const TreeParams& p) const { return tree_params_json(p); }
  json operator()(const ForestParams& p) const {
    json j = tree_params_json(p.tree);
    j["n_trees"] = p.n_trees;
    j["bootstrap"] = p.bootstrap;
    j["max_features"] = p.max_features;
    return j;
  }
};

Hyperparameters hyperparameters_from(Family f, const json& j) {
  switch (f) {
    case Family::kLogReg:
      return LogRegParams{j.at("learning_rate").get<double>(), j.at("l2").get<double>(), j.at("max_iter").get<int>()};
    case Family::kSvm: {
      SvmParams p;
      p.kernel = parse_kernel(j.at("kernel").get<std::string>());
      p.c = j.at("c").get<double>();
      p.gamma = j.at("gamma").get<double>();
      p.degree = j.at("degree").get<int>();
      p.coef0 = j.at("coef0").get<double>();
      p.tol = j.at("tol").get<double>();
      p.max_passes = j.at("max_passes").get<int>();
      p.max_iter = j.at("max_iter").get<int>();
      return p;
    }
    case Family::kKnn:
      return KnnParams{j.at("k").get<int>()};
    case Family::kGnb:
      return GnbParams{j.at("var_smoothing").get<double>()};
    case Family::kPerceptron:
      return PerceptronParams{j.at("learning_rate").get<double>(), j.at("epochs").get<int>()};
    case Family::kSgd:
      return SgdParams{j.at("learning_rate").get<double>(), j.at("alpha").get<double>(), j.at("epochs").get<int>()};
    case Family::kDecisionTree:
      return tree_params_from(j);
    case Family::kRandomForest: {
      ForestParams p;
      p.tree = tree_params_from(j);
      p.n_trees = j.at("n_trees").get<int>();
      p.bootstrap = j.at("bootstrap").get<bool>();
      p.max_features = j.at("max_features").get<int>();
      return p;
    }
  }
  throw DataError("unknown model family");
}

json tree_json(const Tree& t) {
  json nodes = json::array();
  for (const TreeNode& n : t.nodes) {
    nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.label}));
  }
  return nodes;
}

Tree tree_from(const json& j) {
  Tree t;
  for (const json& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<int>();
    node.right = n.at(3).get<int>();
    node.label = n.at(4).get<int>();
    t.nodes.push_back(node);
  }
  const auto count = static_cast<int>(t.nodes.size());
  for (const TreeNode& n : t.nodes) {
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count)) {
      throw DataError("model file: tree node references a missing child");
    }
  }
  if (t.nodes.empty()) throw DataError("model file: empty tree");
  return t;
}

struct ParameterWriter {
  json operator()(const LinearModel& m) const {
    return {{"standardizer", standardizer_json(m.standardizer)},
            {"weights", to_json(m.weights)},
            {"bias", to_json(m.bias)}};
  }
  json operator()(const SvmModel& m) const {
    json machines = json::array();
    for (const SvmMachine& mc : m.machines) {
      machines.push_back({{"coef", to_json(mc.coef)}, {"support", mc.support}, {"bias", mc.bias}});
    }
    return {{"standardizer", standardizer_json(m.standardizer)},
            {"gamma", m.gamma},
            {"vectors", to_json(m.vectors)},
            {"machines", machines}};
  }
  json operator()(const KnnModel& m) const {
    return {{"standardizer", standardizer_json(m.standardizer)}, {"x", to_json(m.x)}, {"y", m.y}};
  }
  json operator()(const GnbModel& m) const {
    json prior = json::array();
    for (Eigen::Index i = 0; i < m.log_prior.size(); ++i) {
      // JSON has no -inf; absent classes are written as null.
      if (m.log_prior(i) == std::numeric_limits<double>::lowest()) {
        prior.push_back(nullptr);
      } else {
        prior.push_back(m.log_prior(i));
      }
    }
    return {{"mean", to_json(m.mean)}, {"var", to_json(m.var)}, {"log_prior", prior}};
  }
  json operator()(const Tree& t) const { return {{"nodes", tree_json(t)}}; }
  json operator()(const ForestModel& f) const {
    json trees = json::array();
    for (const Tree& t : f.trees) trees.push_back(tree_json(t));
    return {{"trees", trees}};
  }
};

LearnedParameters parameters_from(Family f, const json& j, Eigen::Index features) {
  switch (f) {
    case Family::kLogReg:
    case Family::kPerceptron:
    case Family::kSgd:
      return LinearModel{standardizer_from(j.at("standardizer")), matrix_from(j.at("weights"), features),
                         vector_from(j.at("bias"))};
    case Family::kSvm: {
      SvmModel m;
      m.standardizer = standardizer_from(j.at("standardizer"));
      m.gamma = j.at("gamma").get<double>();
      m.vectors = matrix_from(j.at("vectors"), features);
      for (const json& mc : j.at("machines")) {
        SvmMachine machine;
        machine.coef = vector_from(mc.at("coef"));
        machine.support = mc.at("support").get<std::vector<std::size_t>>();
        machine.bias = mc.at("bias").get<double>();
        for (std::size_t s : machine.support) {
          if (s >= static_cast<std::size_t>(m.vectors.rows())) throw DataError("model file: bad support index");
        }
        if (machine.support.size() != static_cast<std::size_t>(machine.coef.size())) {
          throw DataError("model file: support/coef length mismatch");
        }
        m.machines.push_back(std::move(machine));
      }
      return m;
    }
    case Family::kKnn: {
      KnnModel m;
      m.standardizer = standardizer_from(j.at("standardizer"));
      m.x = matrix_from(j.at("x"), features);
      m.y = j.at("y").get<std::vector<int>>();
      return m;
    }
    case Family::kGnb: {
      GnbModel m;
      m.mean = matrix_from(j.at("mean"), features);
      m.var = matrix_from(j.at("var"), features);
      const json& prior = j.at("log_prior");
      m.log_prior.resize(static_cast<Eigen::Index>(prior.size()));
      for (std::size_t i = 0; i < prior.size(); ++i) {
        m.log_prior(static_cast<Eigen::Index>(i)) =
            prior[i].is_null() ? std::numeric_limits<double>::lowest() : prior[i].get<double>();
      }
      return m;
    }
    case Family::kDecisionTree:
      return tree_from(j.at("nodes"));
    case Family::kRandomForest: {
      ForestModel f;
      for (const json& t : j.at("trees")) f.trees.push_back(tree_from(t));
      return f;
    }
  }
  throw DataError("unknown model family");
}

}  // namespace

std::string model_to_json(const TrainedModel& m) {
  json j;
  j["family"] = family_name(m.spec.family());
  j["hyperparameters"] = std::visit(HyperparameterWriter{}, m.spec.params);
  j["seed"] = m.spec.seed;
  j["class_names"] = m.class_names;
  j["feature_count"] = m.feature_count;
  if (m.split) {
    j["training_split"] = {{"train_fraction", m.split->train_fraction},
                           {"seed", m.split->seed},
                           {"by_span", m.split->by_span}};
  }
  j["parameters"] = std::visit(ParameterWriter{}, m.parameters);
  return j.dump(1) + "\n";
}

TrainedModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    TrainedModel m;
    const Family f = parse_family(j.at("family").get<std::string>());
    m.spec.params = hyperparameters_from(f, j.at("hyperparameters"));
    m.spec.seed = j.at("seed").get<std::uint64_t>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.feature_count = j.at("feature_count").get<Eigen::Index>();
    if (j.contains("training_split")) {
      const json& s = j.at("training_split");
      m.split = TrainingSplit{s.at("train_fraction").get<double>(), s.at("seed").get<std::uint64_t>(),
                              s.at("by_span").get<bool>()};
    }
    m.parameters = parameters_from(f, j.at("parameters"), m.feature_count);
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  } catch (const ParamError& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

std::string report_json(const EvalReport& r, const std::string& family) {
  json confusion = json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < r.confusion.cols(); ++k) row.push_back(r.confusion(i, k));
    confusion.push_back(row);
  }
  const json j = {{"family", family},
                  {"accuracy", r.accuracy},
                  {"n_test", r.n_test},
                  {"class_names", r.class_names},
                  {"confusion", confusion}};
  return j.dump(1) + "\n";
}

}  // namespace crowdflow::ml
