#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crowdflow/error.hpp"
#include "crowdflow/parallel.hpp"
#include "crowdflow/random.hpp"
#include "ml_internal.hpp"

namespace crowdflow::ml {
namespace {

int majority(const std::vector<int>& counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes, const TreeParams& p, int max_features,
              std::uint64_t seed)
      : x_(x), y_(y), classes_(classes), p_(p), max_features_(max_features), rng_(seed) {}

  Tree build(std::vector<std::size_t> rows) {
    Tree t;
    grow(t, std::move(rows), 0);
    return t;
  }

 private:
  struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
  };

  std::vector<int> features_for_split() {
    const int f = static_cast<int>(x_.cols());
    std::vector<int> all(static_cast<std::size_t>(f));
    std::iota(all.begin(), all.end(), 0);
    if (max_features_ >= f) return all;
    for (int i = 0; i < max_features_; ++i) {
      const std::size_t j = static_cast<std::size_t>(i) + rng_.index(static_cast<std::size_t>(f - i));
      std::swap(all[static_cast<std::size_t>(i)], all[j]);
    }
    all.resize(static_cast<std::size_t>(max_features_));
    std::sort(all.begin(), all.end());
    return all;
  }

  BestSplit best_split(const std::vector<std::size_t>& rows) {
    BestSplit best;
    const std::size_t n = rows.size();
    std::vector<std::size_t> order(rows);
    for (int f : features_for_split()) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x_(static_cast<Eigen::Index>(a), f) < x_(static_cast<Eigen::Index>(b), f); });
      std::vector<int> left(static_cast<std::size_t>(classes_), 0);
      std::vector<int> right(static_cast<std::size_t>(classes_), 0);
      for (std::size_t r : order) ++right[static_cast<std::size_t>(y_[r])];
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const int label = y_[order[i]];
        ++left[static_cast<std::size_t>(label)];
        --right[static_cast<std::size_t>(label)];
        const double a = x_(static_cast<Eigen::Index>(order[i]), f);
        const double b = x_(static_cast<Eigen::Index>(order[i + 1]), f);
        if (!(a < b)) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (nl < static_cast<std::size_t>(p_.min_samples_leaf) || nr < static_cast<std::size_t>(p_.min_samples_leaf)) {
          continue;
        }
        const double imp = (static_cast<double>(nl) * impurity(left, p_.criterion) +
                            static_cast<double>(nr) * impurity(right, p_.criterion)) /
                           static_cast<double>(n);
        if (imp < best.impurity) {
          double thr = a + 0.5 * (b - a);
          if (!(thr < b)) thr = a;
          best = {f, thr, imp};
        }
      }
    }
    return best;
  }

  int grow(Tree& t, std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    std::vector<int> counts(static_cast<std::size_t>(classes_), 0);
    for (std::size_t r : rows) ++counts[static_cast<std::size_t>(y_[r])];
    t.nodes[static_cast<std::size_t>(id)].label = majority(counts);
    const bool pure = std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) <= 1;
    if (pure || depth >= p_.max_depth || rows.size() < static_cast<std::size_t>(p_.min_samples_split)) return id;

    const BestSplit split = best_split(rows);
    if (split.feature < 0) return id;
    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      (x_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int left = grow(t, std::move(left_rows), depth + 1);
    const int right = grow(t, std::move(right_rows), depth + 1);
    TreeNode& node = t.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  const Eigen::MatrixXd& x_;
  const std::vector<int>& y_;
  int classes_;
  TreeParams p_;
  int max_features_;
  Rng rng_;
};

}  // namespace

double impurity(const std::vector<int>& class_counts, Criterion c) {
  const double n = std::accumulate(class_counts.begin(), class_counts.end(), 0.0);
  if (n <= 0.0) return 0.0;
  double acc = c == Criterion::kGini ? 1.0 : 0.0;
  for (int k : class_counts) {
    if (k == 0) continue;
    const double p = k / n;
    if (c == Criterion::kGini) {
      acc -= p * p;
    } else {
      acc -= p * std::log2(p);
    }
  }
  // A pure node is exactly zero under both criteria.
  if (std::count_if(class_counts.begin(), class_counts.end(), [](int k) { return k > 0; }) <= 1) return 0.0;
  return acc;
}

int Tree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int id = 0;
  while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(id)];
    id = row(n.feature) <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(id)].label;
}

Tree grow_tree(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes, const std::vector<std::size_t>& rows,
               const TreeParams& p, int max_features, std::uint64_t rng_seed) {
  if (rows.empty()) throw ParamError("grow_tree: no rows");
  return TreeBuilder(x, y, classes, p, max_features, rng_seed).build(rows);
}

LearnedParameters fit_trees(const ModelSpec& spec, const Dataset& train) {
  const auto n = static_cast<std::size_t>(train.size());
  const int f = static_cast<int>(train.feature_count());
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (const auto* tp = std::get_if<TreeParams>(&spec.params)) {
    return grow_tree(train.x, train.y, train.class_count(), all, *tp, f, spec.seed);
  }
  const auto& fp = std::get<ForestParams>(spec.params);
  const int max_features =
      fp.max_features > 0 ? std::min(fp.max_features, f) : std::max(1, static_cast<int>(std::floor(std::sqrt(f))));
  ForestModel forest;
  forest.trees.resize(static_cast<std::size_t>(fp.n_trees));
  // Tree t draws only from seed + t, so the schedule cannot change results.
  parallel_for(forest.trees.size(), [&](std::size_t t) {
    const std::uint64_t tree_seed = spec.seed + t;
    std::vector<std::size_t> rows = all;
    if (fp.bootstrap) {
      Rng rng(tree_seed);
      for (std::size_t& r : rows) r = rng.index(n);
    }
    forest.trees[t] = grow_tree(train.x, train.y, train.class_count(), rows, fp.tree, max_features,
                                derive_seed(tree_seed, 1));
  });
  return forest;
}

}  // namespace crowdflow::ml
