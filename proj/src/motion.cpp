#include "crowdflow/motion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <string>

#include "crowdflow/error.hpp"
#include "crowdflow/random.hpp"

namespace crowdflow {

double direction_degrees(double dx, double dy) {
  double deg = std::atan2(-dy, dx) * (180.0 / M_PI);
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg = 0.0;
  return deg;
}

int direction_bin(double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) throw ParamError("direction_bin: zero vector has no direction");
  const int bin = static_cast<int>(std::floor(direction_degrees(dx, dy) / kBinWidthDeg));
  return std::clamp(bin, 0, kDirectionBins - 1);
}

MotionVector MotionVector::from(const Eigen::Vector2d& start, const Eigen::Vector2d& delta) {
  MotionVector mv;
  mv.start = start;
  mv.delta = delta;
  mv.magnitude = std::hypot(delta.x(), delta.y());
  if (delta.x() != 0.0 || delta.y() != 0.0) {
    mv.direction_deg = direction_degrees(delta.x(), delta.y());
    mv.bin = direction_bin(delta.x(), delta.y());
  }
  return mv;
}

std::vector<MotionVector> make_vectors(const std::vector<TrackedPoint>& tracked) {
  std::vector<MotionVector> out;
  out.reserve(tracked.size());
  for (const TrackedPoint& tp : tracked) {
    if (tp.tracked()) out.push_back(MotionVector::from(tp.start, tp.end - tp.start));
  }
  return out;
}

void NoiseParams::validate() const {
  if (!(min_magnitude >= 0.0 && min_magnitude < max_magnitude)) {
    throw ParamError("noise thresholds need 0 <= min_magnitude < max_magnitude");
  }
}

std::vector<MotionVector> filter_noise(const std::vector<MotionVector>& vs, const NoiseParams& p) {
  p.validate();
  std::vector<MotionVector> out;
  std::copy_if(vs.begin(), vs.end(), std::back_inserter(out), [&](const MotionVector& v) {
    return v.magnitude >= p.min_magnitude && v.magnitude <= p.max_magnitude;
  });
  return out;
}

void DbscanParams::validate() const {
  if (!(eps > 0.0)) throw ParamError("dbscan eps must be > 0");
  if (min_pts < 1) throw ParamError("dbscan min_pts must be >= 1");
  if (!(weights.array() > 0.0).all()) throw ParamError("dbscan weights must be > 0");
}

Eigen::MatrixX4d cluster_features(const std::vector<MotionVector>& vs, const Eigen::Vector4d& weights) {
  Eigen::MatrixX4d f(static_cast<Eigen::Index>(vs.size()), 4);
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    f.row(r) << vs[i].start.x(), vs[i].start.y(), vs[i].delta.x(), vs[i].delta.y();
  }
  return f * weights.asDiagonal();
}

ClusterLabeling dbscan(const std::vector<MotionVector>& vs, const DbscanParams& p) {
  p.validate();
  const Eigen::MatrixX4d f = cluster_features(vs, p.weights);
  const auto n = static_cast<Eigen::Index>(vs.size());
  const double eps2 = p.eps * p.eps;
  auto region = [&](Eigen::Index i) {
    std::vector<Eigen::Index> nb;
    for (Eigen::Index j = 0; j < n; ++j) {
      if ((f.row(j) - f.row(i)).squaredNorm() <= eps2) nb.push_back(j);
    }
    return nb;
  };

  constexpr int kUnvisited = -2;
  ClusterLabeling labels(vs.size(), kUnvisited);
  int next_cluster = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)] != kUnvisited) continue;
    const std::vector<Eigen::Index> nb = region(i);
    if (static_cast<int>(nb.size()) < p.min_pts) {
      labels[static_cast<std::size_t>(i)] = -1;
      continue;
    }
    const int cluster = next_cluster++;
    labels[static_cast<std::size_t>(i)] = cluster;
    std::deque<Eigen::Index> frontier(nb.begin(), nb.end());
    while (!frontier.empty()) {
      const Eigen::Index j = frontier.front();
      frontier.pop_front();
      int& lj = labels[static_cast<std::size_t>(j)];
      if (lj == -1) lj = cluster;  // noise becomes a border point
      if (lj != kUnvisited) continue;
      lj = cluster;
      const std::vector<Eigen::Index> nbj = region(j);
      if (static_cast<int>(nbj.size()) >= p.min_pts) frontier.insert(frontier.end(), nbj.begin(), nbj.end());
    }
  }
  return labels;
}

ClusterLabeling kmeans(const std::vector<MotionVector>& vs, int k, std::uint64_t seed, int max_iters,
                       const Eigen::Vector4d& weights) {
  const auto n = static_cast<int>(vs.size());
  if (k < 1) throw ParamError("kmeans: k must be >= 1");
  if (k > n) throw ParamError("kmeans: k exceeds the number of points");
  if (max_iters < 1) throw ParamError("kmeans: max_iters must be >= 1");
  const Eigen::MatrixX4d f = cluster_features(vs, weights);

  Rng rng(seed);
  std::vector<std::size_t> order = rng.permutation(static_cast<std::size_t>(n));
  Eigen::MatrixX4d centroids(k, 4);
  for (int c = 0; c < k; ++c) centroids.row(c) = f.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(c)]));

  ClusterLabeling labels(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    ClusterLabeling assigned(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (f.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assigned[static_cast<std::size_t>(i)] = best;
    }
    // Empty clusters take the point farthest from its centroid among
    // clusters that can spare one.
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : assigned) ++sizes[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      int far = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const int l = assigned[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(l)] < 2) continue;
        const double d = (f.row(i) - centroids.row(l)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --sizes[static_cast<std::size_t>(assigned[static_cast<std::size_t>(far)])];
      assigned[static_cast<std::size_t>(far)] = c;
      sizes[static_cast<std::size_t>(c)] = 1;
    }
    const bool converged = assigned == labels;
    labels = std::move(assigned);
    centroids.setZero();
    for (int i = 0; i < n; ++i) centroids.row(labels[static_cast<std::size_t>(i)]) += f.row(i);
    for (int c = 0; c < k; ++c) centroids.row(c) /= sizes[static_cast<std::size_t>(c)];
    if (converged) break;
  }
  return labels;
}

std::vector<ClusterSummary> cluster_representatives(const std::vector<MotionVector>& vs,
                                                    const ClusterLabeling& labels) {
  if (labels.size() != vs.size()) throw ParamError("cluster_representatives: labeling length mismatch");
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<Eigen::Vector2d> start_sum(static_cast<std::size_t>(k), Eigen::Vector2d::Zero());
  std::vector<Eigen::Vector2d> delta_sum(static_cast<std::size_t>(k), Eigen::Vector2d::Zero());
  std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (labels[i] < 0) continue;
    const auto c = static_cast<std::size_t>(labels[i]);
    start_sum[c] += vs[i].start;
    delta_sum[c] += vs[i].delta;
    ++count[c];
  }
  std::vector<ClusterSummary> out;
  for (std::size_t c = 0; c < count.size(); ++c) {
    if (count[c] == 0) continue;
    ClusterSummary s;
    s.cluster = static_cast<int>(c);
    s.count = count[c];
    const double inv = 1.0 / static_cast<double>(count[c]);
    s.representative = MotionVector::from(start_sum[c] * inv, delta_sum[c] * inv);
    s.degenerate = s.representative.bin < 0;
    out.push_back(s);
  }
  return out;
}

double adjusted_rand_index(const ClusterLabeling& a, const ClusterLabeling& b) {
  if (a.size() != b.size()) throw ParamError("adjusted_rand_index: labeling length mismatch");
  if (a.size() < 2) throw ParamError("adjusted_rand_index: need at least 2 items");
  std::map<std::pair<int, int>, long long> joint;
  std::map<int, long long> rows;
  std::map<int, long long> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  auto pairs = [](long long m) { return static_cast<double>(m) * static_cast<double>(m - 1) / 2.0; };
  double index = 0.0;
  for (const auto& [key, m] : joint) index += pairs(m);
  double sum_a = 0.0;
  for (const auto& [key, m] : rows) sum_a += pairs(m);
  double sum_b = 0.0;
  for (const auto& [key, m] : cols) sum_b += pairs(m);
  const double total = pairs(static_cast<long long>(a.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  // Both partitions all-singletons or both one cluster.
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::string cluster_csv(const std::vector<MotionVector>& vs, const ClusterLabeling& labels) {
  if (labels.size() != vs.size()) throw ParamError("cluster_csv: labeling length mismatch");
  std::string out = "vector_index,x,y,dx,dy,magnitude,bin,cluster\n";
  char buf[256];
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const MotionVector& v = vs[i];
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d\n", i, v.start.x(), v.start.y(), v.delta.x(),
                  v.delta.y(), v.magnitude, v.bin, labels[i]);
    out += buf;
  }
  return out;
}

}  // namespace crowdflow
