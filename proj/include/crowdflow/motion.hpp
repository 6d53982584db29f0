#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crowdflow/optflow.hpp"

namespace crowdflow {

inline constexpr int kDirectionBins = 12;
inline constexpr double kBinWidthDeg = 360.0 / kDirectionBins;

// Screen coordinates (y down). direction_deg = atan2(-dy, dx) in [0, 360),
// so motion toward the top of the image is 90 degrees.
struct MotionVector {
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  Eigen::Vector2d delta = Eigen::Vector2d::Zero();
  double magnitude = 0.0;
  double direction_deg = 0.0;
  int bin = -1;  // -1 only for zero displacement

  static MotionVector from(const Eigen::Vector2d& start, const Eigen::Vector2d& delta);
};

double direction_degrees(double dx, double dy);

// Throws ParamError on the zero vector.
int direction_bin(double dx, double dy);

std::vector<MotionVector> make_vectors(const std::vector<TrackedPoint>& tracked);

struct NoiseParams {
  double min_magnitude = 1.0;
  double max_magnitude = 50.0;

  void validate() const;
};

std::vector<MotionVector> filter_noise(const std::vector<MotionVector>& vs, const NoiseParams& p);

// -1 = noise; clusters numbered 0..k-1.
using ClusterLabeling = std::vector<int>;

struct DbscanParams {
  double eps = 12.0;
  int min_pts = 4;
  Eigen::Vector4d weights{1.0, 1.0, 4.0, 4.0};  // (x, y, dx, dy)

  void validate() const;
};

// Weighted clustering features, one row per vector: (w1 x, w2 y, w3 dx, w4 dy).
Eigen::MatrixX4d cluster_features(const std::vector<MotionVector>& vs, const Eigen::Vector4d& weights);

// Neighborhoods include the point itself; dist <= eps.
ClusterLabeling dbscan(const std::vector<MotionVector>& vs, const DbscanParams& p);

// Lloyd's algorithm on the same weighted feature space.
ClusterLabeling kmeans(const std::vector<MotionVector>& vs, int k, std::uint64_t seed, int max_iters,
                       const Eigen::Vector4d& weights = Eigen::Vector4d(1.0, 1.0, 4.0, 4.0));

struct ClusterSummary {
  int cluster = 0;
  std::size_t count = 0;
  MotionVector representative;
  bool degenerate = false;  // mean displacement is zero; bin undefined (-1)
};

std::vector<ClusterSummary> cluster_representatives(const std::vector<MotionVector>& vs,
                                                    const ClusterLabeling& labels);

// Pair-counting ARI; -1 is scored as an ordinary cluster id.
double adjusted_rand_index(const ClusterLabeling& a, const ClusterLabeling& b);

// vector_index,x,y,dx,dy,magnitude,bin,cluster
std::string cluster_csv(const std::vector<MotionVector>& vs, const ClusterLabeling& labels);

}  // namespace crowdflow
