#pragma once

#include <string>
#include <vector>

#include "crowdflow/imgio.hpp"

namespace crowdflow {

struct CornerPoint {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
};

struct CornerParams {
  int max_corners = 400;
  double quality_level = 0.01;
  double min_distance = 7.0;
  int block_size = 3;       // structure-tensor window, odd
  int fast_threshold = 20;  // intensity units
  int fast_arc = 9;         // contiguous circle pixels required

  void validate() const;
};

enum class Detector { kShiTomasi, kFast };

// Minimum eigenvalue of the Sobel structure tensor summed over a
// block_size window. Pixels whose window touches the 1-px gradient border
// score zero.
GridD min_eigenvalue_map(const Frame& f, int block_size);

// Sorted by descending score; ties in row-major order.
std::vector<CornerPoint> detect_shi_tomasi(const Frame& f, const CornerParams& p);

// Segment test on the radius-3 Bresenham circle with 3x3 non-max
// suppression. Returns every survivor, sorted like detect_shi_tomasi.
std::vector<CornerPoint> detect_fast(const Frame& f, const CornerParams& p);

// Dispatches on the detector and truncates to p.max_corners.
std::vector<CornerPoint> detect_corners(const Frame& f, Detector d, const CornerParams& p);

Detector parse_detector(const std::string& name);  // "shi-tomasi" or "fast"
std::string detector_name(Detector d);

// Offsets (dx, dy) of the 16 circle pixels, clockwise from 12 o'clock.
inline constexpr int kFastCircle[16][2] = {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},
                                           {2, 2},  {1, 3},  {0, 3},  {-1, 3}, {-2, 2}, {-3, 1},
                                           {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};

}  // namespace crowdflow
