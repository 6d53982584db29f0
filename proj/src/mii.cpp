#include "crowdflow/mii.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "crowdflow/error.hpp"

namespace crowdflow {

void MiiParams::validate() const {
  if (!(magnitude_multiplier >= 0.0)) throw ParamError("mii magnitude multiplier must be >= 0");
  if (!(gain > 0.0)) throw ParamError("mii gain must be > 0");
  if (width < 1 || height < 1) throw ParamError("mii canvas must be non-empty");
}

Rgb hsv_to_rgb(double hue_deg, int value8) {
  const double h = std::fmod(std::fmod(hue_deg, 360.0) + 360.0, 360.0) / 60.0;
  const int sector = static_cast<int>(std::floor(h));
  const double frac = h - sector;
  // s = 1: the smallest channel is zero, the largest is the value.
  const auto rising = static_cast<std::uint8_t>(std::lround(value8 * frac));
  const auto falling = static_cast<std::uint8_t>(std::lround(value8 * (1.0 - frac)));
  const auto v = static_cast<std::uint8_t>(value8);
  switch (sector % 6) {
    case 0:
      return {v, rising, 0};
    case 1:
      return {falling, v, 0};
    case 2:
      return {0, v, rising};
    case 3:
      return {0, falling, v};
    case 4:
      return {rising, 0, v};
    default:
      return {v, 0, falling};
  }
}

int mii_value(const MotionVector& v, const MiiParams& p) {
  const double value = std::min(1.0, v.magnitude * p.magnitude_multiplier * p.gain / 255.0);
  return static_cast<int>(std::lround(255.0 * value));
}

std::vector<std::pair<int, int>> bresenham(int x0, int y0, int x1, int y1) {
  std::vector<std::pair<int, int>> pts;
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    pts.emplace_back(x0, y0);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
  return pts;
}

RgbImage render_mii(const std::vector<MotionVector>& vs, const MiiParams& p) {
  p.validate();
  RgbImage img(p.width, p.height);
  std::vector<int> value(static_cast<std::size_t>(p.width) * p.height, 0);
  for (const MotionVector& v : vs) {
    if (v.bin < 0) continue;
    const int val = mii_value(v, p);
    if (val == 0) continue;
    const Rgb color = hsv_to_rgb(v.bin * kBinWidthDeg, val);
    const int x0 = static_cast<int>(std::lround(v.start.x()));
    const int y0 = static_cast<int>(std::lround(v.start.y()));
    const int x1 = static_cast<int>(std::lround(v.start.x() + v.delta.x()));
    const int y1 = static_cast<int>(std::lround(v.start.y() + v.delta.y()));
    for (const auto& [x, y] : bresenham(x0, y0, x1, y1)) {
      if (x < 0 || y < 0 || x >= p.width || y >= p.height) continue;
      int& cur = value[static_cast<std::size_t>(y) * p.width + x];
      if (val >= cur) {
        cur = val;
        img.set(x, y, color);
      }
    }
  }
  return img;
}

}  // namespace crowdflow
