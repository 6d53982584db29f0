#include <doctest.h>

#include <cmath>

#include "crowdflow/ml.hpp"
#include "helpers.hpp"

using namespace crowdflow;
using namespace crowdflow::ml;

namespace {

const std::vector<Family> kFamilies = {Family::kLogReg,     Family::kSvm, Family::kKnn,          Family::kGnb,
                                       Family::kPerceptron, Family::kSgd, Family::kDecisionTree, Family::kRandomForest};

Dataset make(const Eigen::MatrixXd& x, std::vector<int> y, int classes) {
  Dataset d;
  d.x = x;
  d.y = std::move(y);
  for (int c = 0; c < classes; ++c) d.class_names.push_back("c" + std::to_string(c));
  return d;
}

// Gaussian blobs, one per class, in `dims` dimensions.
Dataset blobs(Rng& rng, int n, int dims, int classes, double spread) {
  Eigen::MatrixXd centers(classes, dims);
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = rng.uniform(-5, 5);
  Eigen::MatrixXd x(n, dims);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % classes;
    for (int j = 0; j < dims; ++j) x(i, j) = centers(y[i], j) + spread * rng.normal();
  }
  return make(x, y, classes);
}

TrainedModel zero_logreg(int classes, int dims) {
  TrainedModel m;
  m.spec = default_spec(Family::kLogReg);
  m.feature_count = dims;
  for (int c = 0; c < classes; ++c) m.class_names.push_back("c" + std::to_string(c));
  LinearModel lm;
  lm.standardizer.mean = Eigen::RowVectorXd::Zero(dims);
  lm.standardizer.scale = Eigen::RowVectorXd::Ones(dims);
  lm.weights = Eigen::MatrixXd::Zero(classes, dims);
  lm.bias = Eigen::VectorXd::Zero(classes);
  m.parameters = lm;
  return m;
}

}  // namespace

TEST_CASE("split sizes") {
  Rng rng(1);
  const Dataset d10 = blobs(rng, 10, 2, 2, 1.0);
  const Split s = split_dataset(d10, 0.7, 42);
  CHECK(s.train.size() == 7);
  CHECK(s.test.size() == 3);
  const Dataset big = blobs(rng, 2839, 2, 4, 1.0);
  const Split b = split_dataset(big, 0.7, 42);
  CHECK(b.train.size() == 1987);
  CHECK(b.test.size() == 852);
  const Split again = split_dataset(big, 0.7, 42);
  CHECK(again.train.x == b.train.x);
  CHECK(again.test.y == b.test.y);
}

TEST_CASE("span split keeps label runs together") {
  Eigen::MatrixXd x(40, 1);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) x(i, 0) = i, y[i] = (i / 5) % 4;
  const Split s = split_dataset_by_span(make(x, y, 4), 0.7, 3);
  CHECK(s.train.size() + s.test.size() == 40);
  for (const Dataset* part : {&s.train, &s.test}) {
    for (Eigen::Index i = 0; i < part->size(); ++i) {
      const int run = static_cast<int>(part->x(i, 0)) / 5;
      int members = 0;
      for (Eigen::Index j = 0; j < part->size(); ++j) members += static_cast<int>(part->x(j, 0)) / 5 == run;
      CHECK(members == 5);
    }
  }
}

TEST_CASE("softmax rows are distributions") {
  Rng rng(2);
  Eigen::MatrixXd logits(50, 5);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.uniform(-800, 800);
  const Eigen::MatrixXd p = softmax(logits);
  CHECK((p.array() >= 0).all());
  for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(std::abs(p.row(i).sum() - 1.0) <= 1e-9);
  CHECK((softmax(Eigen::MatrixXd::Zero(1, 4)).array() > 0).all());
}

TEST_CASE("logreg separates a 4-point set") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 0, 1, 3, 0, 3, 1;
  const Dataset d = make(x, {0, 0, 1, 1}, 2);
  const TrainedModel m = fit(default_spec(Family::kLogReg), d);
  CHECK(evaluate(m, d).accuracy == 1.0);
}

TEST_CASE("zero-weight logreg predicts class 0") {
  const TrainedModel m = zero_logreg(4, 3);
  CHECK(predict_row(m, Eigen::RowVector3d(1, -2, 3)) == 0);
  CHECK_THROWS_AS(predict_row(m, Eigen::RowVector2d(1, 2)), ParamError);
}

TEST_CASE("knn") {
  Rng rng(3);
  const Dataset d = blobs(rng, 60, 3, 3, 2.0);
  ModelSpec one = default_spec(Family::kKnn);
  std::get<KnnParams>(one.params).k = 1;
  const TrainedModel m = fit(one, d);
  CHECK(predict(m, d.x) == d.y);

  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 2, 10;
  ModelSpec three = default_spec(Family::kKnn);
  std::get<KnnParams>(three.params).k = 3;
  const TrainedModel k3 = fit(three, make(x, {1, 1, 2, 0}, 3));
  CHECK(predict_row(k3, Eigen::RowVectorXd::Constant(1, 0.9)) == 1);
}

TEST_CASE("gnb boundary between two 1-D classes") {
  Eigen::MatrixXd x(8, 1);
  x << -1.5, -0.5, 0.5, 1.5, 8.5, 9.5, 10.5, 11.5;
  const TrainedModel m = fit(default_spec(Family::kGnb), make(x, {0, 0, 0, 0, 1, 1, 1, 1}, 2));
  // Equal variances and priors: the boundary is the midpoint of the means (5).
  CHECK(predict_row(m, Eigen::RowVectorXd::Constant(1, 4.0)) == 0);
  CHECK(predict_row(m, Eigen::RowVectorXd::Constant(1, 6.0)) == 1);
}

TEST_CASE("evaluate") {
  Rng rng(4);
  const Dataset d = blobs(rng, 40, 2, 4, 0.01);
  ModelSpec s = default_spec(Family::kKnn);
  std::get<KnnParams>(s.params).k = 1;
  const EvalReport perfect = evaluate(fit(s, d), d);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.confusion == Eigen::MatrixXi(perfect.confusion.diagonal().asDiagonal()));
  const EvalReport constant = evaluate(zero_logreg(4, 2), d);
  CHECK(constant.accuracy == 0.25);
  for (int c = 0; c < 4; ++c) CHECK(constant.confusion.row(c).sum() == 10);
  CHECK(report_json(constant, "logreg").find("\"accuracy\"") != std::string::npos);
}

TEST_CASE("gradient check on small datasets") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = blobs(rng, 5 + static_cast<int>(rng.index(45)), 1 + static_cast<int>(rng.index(6)),
                            2 + static_cast<int>(rng.index(3)), rng.uniform(0.5, 3.0));
    const double err = gradient_check(default_spec(Family::kLogReg, trial), d);
    CHECK(err <= 1e-4);
    CHECK(err == gradient_check(default_spec(Family::kLogReg, trial), d));
  }
}

TEST_CASE("analytic gradient at zero weights matches central differences") {
  Rng rng(6);
  const Dataset d = blobs(rng, 12, 3, 3, 1.0);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  const Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
  const LossAndGradient g = logreg_loss(d.x, d.y, 3, w, b, 0.01);
  CHECK(g.loss == doctest::Approx(std::log(3.0)));
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Eigen::MatrixXd wp = w, wm = w;
    wp.data()[i] += h;
    wm.data()[i] -= h;
    const double fd = (logreg_loss(d.x, d.y, 3, wp, b, 0.01).loss - logreg_loss(d.x, d.y, 3, wm, b, 0.01).loss) / (2 * h);
    CHECK(g.grad_w.data()[i] == doctest::Approx(fd).epsilon(1e-6).scale(1e-6));
  }
  // Balanced labels: the bias gradient at zero is exactly zero.
  CHECK(g.grad_b.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("impurity of pure nodes is exactly zero") {
  CHECK(impurity({5, 0, 0}, Criterion::kGini) == 0.0);
  CHECK(impurity({0, 7}, Criterion::kEntropy) == 0.0);
  CHECK(impurity({2, 2}, Criterion::kGini) == doctest::Approx(0.5));
  CHECK(impurity({2, 2}, Criterion::kEntropy) == doctest::Approx(std::log2(2.0)));
}

TEST_CASE("single-tree forest without sampling equals the decision tree") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset d = blobs(rng, 120, 6, 4, 2.5);
    ModelSpec tree = default_spec(Family::kDecisionTree, trial);
    ModelSpec forest = default_spec(Family::kRandomForest, trial);
    auto& fp = std::get<ForestParams>(forest.params);
    fp.n_trees = 1;
    fp.bootstrap = false;
    fp.max_features = 6;
    fp.tree = std::get<TreeParams>(tree.params);
    const TrainedModel a = fit(tree, d), b = fit(forest, d);
    Eigen::MatrixXd probe(300, 6);
    for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = rng.uniform(-9, 9);
    CHECK(predict(a, probe) == predict(b, probe));
  }
}

TEST_CASE("every family fits deterministically and survives a JSON round trip") {
  Rng rng(8);
  const Dataset d = blobs(rng, 80, 5, 4, 1.5);
  for (Family f : kFamilies) {
    CAPTURE(family_name(f));
    const TrainedModel a = fit(default_spec(f, 9), d);
    const TrainedModel b = fit(default_spec(f, 9), d);
    const std::string ja = model_to_json(a);
    CHECK(ja == model_to_json(b));
    const TrainedModel back = model_from_json(ja);
    CHECK(model_to_json(back) == ja);
    CHECK(predict(back, d.x) == predict(a, d.x));
    CHECK(evaluate(a, d).accuracy >= 0.8);
  }
}

TEST_CASE("fits are identical across thread counts") {
  Rng rng(10);
  const Dataset d = blobs(rng, 60, 4, 3, 2.0);
  for (Family f : {Family::kRandomForest, Family::kSvm, Family::kKnn}) {
    std::string a, b;
    {
      testing::ThreadsEnv env(1);
      a = model_to_json(fit(default_spec(f), d));
    }
    {
      testing::ThreadsEnv env(4);
      b = model_to_json(fit(default_spec(f), d));
    }
    CHECK(a == b);
  }
}

TEST_CASE("standardizer is stored and applied at predict time") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 5, 3, 5, 5, 5, 7, 5;
  const Standardizer s = Standardizer::fit(x);
  CHECK(s.mean(0) == 4.0);
  CHECK(s.mean(1) == 0.0);  // constant column passes through raw
  CHECK(s.scale(1) == 1.0);
  const Eigen::MatrixXd z = s.apply(x);
  CHECK(z(0, 1) == 5.0);
  CHECK(z.col(0).mean() == doctest::Approx(0.0).scale(1.0));
  const TrainedModel m = fit(default_spec(Family::kLogReg), make(x, {0, 0, 1, 1}, 2));
  const auto& lm = std::get<LinearModel>(m.parameters);
  CHECK(lm.standardizer.mean == s.mean);
  CHECK(lm.standardizer.scale == s.scale);
}

TEST_CASE("fit preconditions and names") {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  CHECK_THROWS_AS(fit(default_spec(Family::kLogReg), make(x, {0, 0, 0}, 2)), ParamError);
  CHECK_NOTHROW(fit(default_spec(Family::kKnn), make(x, {0, 0, 0}, 2)));
  CHECK_NOTHROW(fit(default_spec(Family::kGnb), make(x, {1, 1, 1}, 2)));
  for (Family f : kFamilies) CHECK(parse_family(family_name(f)) == f);
  CHECK_THROWS_AS(parse_family("lda"), ParamError);
  CHECK_THROWS_AS(model_from_json("{\"family\": 3}"), DataError);
}
