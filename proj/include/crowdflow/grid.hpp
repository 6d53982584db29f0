#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace crowdflow {

// Row-major 2-D grid: rows index y, columns index x.
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GridU8 = Grid<std::uint8_t>;
using GridF = Grid<float>;
using GridD = Grid<double>;

// Clamp-to-border integer read.
template <typename Derived>
inline typename Derived::Scalar clamped_at(const Eigen::ArrayBase<Derived>& g, int x, int y) {
  const int cx = x < 0 ? 0 : (x >= g.cols() ? static_cast<int>(g.cols()) - 1 : x);
  const int cy = y < 0 ? 0 : (y >= g.rows() ? static_cast<int>(g.rows()) - 1 : y);
  return g(cy, cx);
}

// Bilinear read at a subpixel position; out-of-range taps clamp to the border.
template <typename Derived>
inline double sample_bilinear(const Eigen::ArrayBase<Derived>& g, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  const double v00 = static_cast<double>(clamped_at(g, x0, y0));
  const double v10 = static_cast<double>(clamped_at(g, x0 + 1, y0));
  const double v01 = static_cast<double>(clamped_at(g, x0, y0 + 1));
  const double v11 = static_cast<double>(clamped_at(g, x0 + 1, y0 + 1));
  return (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) + ay * ((1.0 - ax) * v01 + ax * v11);
}

}  // namespace crowdflow
