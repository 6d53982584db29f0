#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "crowdflow/imgio.hpp"

namespace crowdflow {

// Gaussian pyramid; levels[0] is full resolution.
template <typename Scalar>
struct Pyramid {
  std::vector<Grid<Scalar>> levels;
};

// 5-tap [1 4 6 4 1]/16 separable blur (border clamped) then 2x decimation.
template <typename Scalar>
Grid<Scalar> pyr_down(const Grid<Scalar>& src) {
  static constexpr double kTaps[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const int w = static_cast<int>(src.cols());
  const int h = static_cast<int>(src.rows());
  Grid<double> horiz(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) acc += kTaps[k + 2] * static_cast<double>(clamped_at(src, x + k, y));
      horiz(y, x) = acc;
    }
  }
  Grid<Scalar> out(h / 2, w / 2);
  for (int y = 0; y < h / 2; ++y) {
    for (int x = 0; x < w / 2; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) acc += kTaps[k + 2] * clamped_at(horiz, 2 * x, 2 * y + k);
      out(y, x) = static_cast<Scalar>(acc);
    }
  }
  return out;
}

inline constexpr int kMinPyramidSide = 16;

Pyramid<double> build_pyramid(const Frame& f, int levels);

enum class TrackStatus { kTracked, kLost };

struct TrackedPoint {
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  Eigen::Vector2d end = Eigen::Vector2d::Zero();  // meaningless when lost
  TrackStatus status = TrackStatus::kLost;
  double residual = 0.0;  // mean absolute window error at level 0

  bool tracked() const { return status == TrackStatus::kTracked; }
};

struct LkParams {
  int window = 21;  // full window side, odd
  int pyramid_levels = 3;
  int max_iters = 30;
  double epsilon = 0.01;  // px, update-norm stop
  int stride = 5;         // keyframe stride
  double min_eigen = 1e-4;  // per-pixel-normalized G threshold

  void validate() const;
  int half_window() const { return window / 2; }
};

// Coarse-to-fine iterative Lucas-Kanade on bilinear subpixel windows.
std::vector<TrackedPoint> lk_track(const Frame& prev, const Frame& next, const std::vector<Eigen::Vector2d>& points,
                                   const LkParams& p);

// Per-pixel displacement: pixel (x, y) of prev maps to (x + u, y + v) in next.
struct DenseFlow {
  GridD u;
  GridD v;
};

// Classical Jacobi relaxation for exactly `iters` iterations.
DenseFlow horn_schunck(const Frame& prev, const Frame& next, double alpha, int iters);

// Exhaustive SAD search per non-overlapping block; ties prefer the smaller
// shift, then row-major shift order.
DenseFlow block_match(const Frame& prev, const Frame& next, int block, int radius);

// Dense flow read at a point (nearest pixel).
Eigen::Vector2d flow_at(const DenseFlow& flow, const Eigen::Vector2d& p);

enum class FlowMethod { kLucasKanade, kHornSchunck, kBlockMatch, kZero };

FlowMethod parse_flow_method(const std::string& name);
std::string flow_method_name(FlowMethod m);

struct DenseParams {
  double hs_alpha = 1.0;
  int hs_iters = 200;
  int bm_block = 8;
  int bm_radius = 8;
};

// Sparse tracking for any method: dense methods are sampled at the points
// (status lost when the point is outside the frame).
std::vector<TrackedPoint> track_points(FlowMethod method, const Frame& prev, const Frame& next,
                                       const std::vector<Eigen::Vector2d>& points, const LkParams& lk,
                                       const DenseParams& dense);

// Synthetic accuracy benchmark.
enum class FlowCase { kStatic, kTranslation, kRotation, kDiverging };

FlowCase parse_flow_case(const std::string& name);
std::string flow_case_name(FlowCase c);

struct FlowBenchReport {
  std::string method;
  std::string flow_case;
  std::uint64_t seed = 0;
  double accuracy = 0.0;  // fraction of evaluated points with endpoint error < 1 px
  double mean_epe_px = 0.0;
  double runtime_ms = 0.0;
  std::size_t evaluated = 0;

  // method,case,seed,accuracy,mean_epe_px,runtime_ms
  std::string csv_line() const;
};

inline constexpr const char* kFlowBenchHeader = "method,case,seed,accuracy,mean_epe_px,runtime_ms";

FlowBenchReport bench_flow(const std::string& method, FlowCase flow_case, std::uint64_t seed);

}  // namespace crowdflow
