#pragma once

#include <vector>

#include "crowdflow/imgio.hpp"
#include "crowdflow/motion.hpp"

namespace crowdflow {

struct MiiParams {
  double magnitude_multiplier = 1.0;
  double gain = 10.0;  // brightness units per px of magnitude
  int width = kWorkingSize;
  int height = kWorkingSize;

  void validate() const;
};

// HSV (s = 1) to 8-bit RGB for a hue in degrees and an 8-bit value.
Rgb hsv_to_rgb(double hue_deg, int value8);

// 8-bit brightness of a vector: round(255 * min(1, magnitude * m * gain / 255)).
int mii_value(const MotionVector& v, const MiiParams& p);

// Black canvas; each vector drawn as a Bresenham segment from its start to
// start + delta, colored hue = bin * 30, value = mii_value. Brighter pixels
// win; equal values go to the later vector.
RgbImage render_mii(const std::vector<MotionVector>& vs, const MiiParams& p);

// Integer points of the Bresenham segment between two pixels, inclusive.
std::vector<std::pair<int, int>> bresenham(int x0, int y0, int x1, int y1);

}  // namespace crowdflow
