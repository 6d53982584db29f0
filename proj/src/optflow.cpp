#include "crowdflow/optflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crowdflow/error.hpp"
#include "crowdflow/parallel.hpp"

namespace crowdflow {
namespace {

void require_same_dims(const Frame& a, const Frame& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ParamError(std::string(what) + ": frame dimension mismatch");
  }
}

// Central differences with clamped borders.
void central_gradients(const GridD& img, GridD& gx, GridD& gy) {
  const int w = static_cast<int>(img.cols());
  const int h = static_cast<int>(img.rows());
  gx.resize(h, w);
  gy.resize(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      gx(y, x) = 0.5 * (clamped_at(img, x + 1, y) - clamped_at(img, x - 1, y));
      gy(y, x) = 0.5 * (clamped_at(img, x, y + 1) - clamped_at(img, x, y - 1));
    }
  }
}

}  // namespace

void LkParams::validate() const {
  if (window < 5 || window % 2 == 0) throw ParamError("lk window must be odd and >= 5");
  if (pyramid_levels < 1) throw ParamError("lk pyramid_levels must be >= 1");
  if (max_iters < 1) throw ParamError("lk max_iters must be >= 1");
  if (!(epsilon > 0.0)) throw ParamError("lk epsilon must be > 0");
  if (stride < 1) throw ParamError("keyframe stride must be >= 1");
}

Pyramid<double> build_pyramid(const Frame& f, int levels) {
  if (levels < 1) throw ParamError("build_pyramid: levels must be >= 1");
  int w = f.width();
  int h = f.height();
  for (int l = 1; l < levels; ++l) {
    w /= 2;
    h /= 2;
  }
  if (std::min(w, h) < kMinPyramidSide) {
    throw ParamError("build_pyramid: " + std::to_string(levels) + " levels leave a top level of " + std::to_string(w) +
                     "x" + std::to_string(h) + " (< " + std::to_string(kMinPyramidSide) + ")");
  }
  Pyramid<double> pyr;
  pyr.levels.reserve(static_cast<std::size_t>(levels));
  pyr.levels.push_back(f.pixels.cast<double>());
  for (int l = 1; l < levels; ++l) pyr.levels.push_back(pyr_down(pyr.levels.back()));
  return pyr;
}

std::vector<TrackedPoint> lk_track(const Frame& prev, const Frame& next, const std::vector<Eigen::Vector2d>& points,
                                   const LkParams& p) {
  require_same_dims(prev, next, "lk_track");
  p.validate();
  const Pyramid<double> pp = build_pyramid(prev, p.pyramid_levels);
  const Pyramid<double> np = build_pyramid(next, p.pyramid_levels);
  std::vector<GridD> gx(pp.levels.size());
  std::vector<GridD> gy(pp.levels.size());
  for (std::size_t l = 0; l < pp.levels.size(); ++l) central_gradients(pp.levels[l], gx[l], gy[l]);

  const int hw = p.half_window();
  const int side = p.window;
  const double n_window = static_cast<double>(side) * side;
  const double w0 = prev.width();
  const double h0 = prev.height();

  std::vector<TrackedPoint> out(points.size());
  parallel_for(points.size(), [&](std::size_t idx) {
    TrackedPoint& tp = out[idx];
    tp.start = points[idx];
    tp.status = TrackStatus::kLost;
    const Eigen::Vector2d pt = points[idx];
    if (pt.x() - hw < 0 || pt.y() - hw < 0 || pt.x() + hw > w0 - 1 || pt.y() + hw > h0 - 1) return;

    Eigen::ArrayXd wi(side * side), wx(side * side), wy(side * side);
    Eigen::Vector2d guess = Eigen::Vector2d::Zero();
    for (int level = p.pyramid_levels - 1; level >= 0; --level) {
      const auto l = static_cast<std::size_t>(level);
      const double scale = 1.0 / static_cast<double>(1 << level);
      const Eigen::Vector2d pl = pt * scale;
      int k = 0;
      for (int j = -hw; j <= hw; ++j) {
        for (int i = -hw; i <= hw; ++i, ++k) {
          const double sx = pl.x() + i;
          const double sy = pl.y() + j;
          wi(k) = sample_bilinear(pp.levels[l], sx, sy);
          wx(k) = sample_bilinear(gx[l], sx, sy);
          wy(k) = sample_bilinear(gy[l], sx, sy);
        }
      }
      Eigen::Matrix2d g;
      g(0, 0) = (wx * wx).sum();
      g(0, 1) = g(1, 0) = (wx * wy).sum();
      g(1, 1) = (wy * wy).sum();
      const double half_trace = 0.5 * (g(0, 0) + g(1, 1));
      const double half_diff = 0.5 * (g(0, 0) - g(1, 1));
      const double min_eig = half_trace - std::sqrt(half_diff * half_diff + g(0, 1) * g(0, 1));
      if (min_eig / n_window < p.min_eigen) return;
      const Eigen::Matrix2d g_inv = g.inverse();

      Eigen::Vector2d v = Eigen::Vector2d::Zero();
      for (int iter = 0; iter < p.max_iters; ++iter) {
        Eigen::Vector2d b = Eigen::Vector2d::Zero();
        k = 0;
        for (int j = -hw; j <= hw; ++j) {
          for (int i = -hw; i <= hw; ++i, ++k) {
            const double jv = sample_bilinear(np.levels[l], pl.x() + i + guess.x() + v.x(), pl.y() + j + guess.y() + v.y());
            const double diff = wi(k) - jv;
            b.x() += diff * wx(k);
            b.y() += diff * wy(k);
          }
        }
        const Eigen::Vector2d eta = g_inv * b;
        v += eta;
        if (eta.norm() < p.epsilon) break;
      }
      guess = level > 0 ? Eigen::Vector2d(2.0 * (guess + v)) : Eigen::Vector2d(guess + v);
    }

    const Eigen::Vector2d end = pt + guess;
    if (!std::isfinite(end.x()) || !std::isfinite(end.y()) || end.x() < 0 || end.y() < 0 || end.x() > w0 - 1 ||
        end.y() > h0 - 1) {
      return;
    }
    double err = 0.0;
    for (int j = -hw; j <= hw; ++j) {
      for (int i = -hw; i <= hw; ++i) {
        err += std::abs(sample_bilinear(pp.levels[0], pt.x() + i, pt.y() + j) -
                        sample_bilinear(np.levels[0], end.x() + i, end.y() + j));
      }
    }
    tp.end = end;
    tp.residual = err / n_window;
    tp.status = TrackStatus::kTracked;
  });
  return out;
}

DenseFlow horn_schunck(const Frame& prev, const Frame& next, double alpha, int iters) {
  require_same_dims(prev, next, "horn_schunck");
  if (!(alpha > 0.0)) throw ParamError("horn_schunck: alpha must be > 0");
  if (iters < 0) throw ParamError("horn_schunck: iters must be >= 0");
  const int w = prev.width();
  const int h = prev.height();
  const GridD a = prev.pixels.cast<double>();
  const GridD b = next.pixels.cast<double>();
  GridD ax, ay, bx, by;
  central_gradients(a, ax, ay);
  central_gradients(b, bx, by);
  const GridD ix = 0.5 * (ax + bx);
  const GridD iy = 0.5 * (ay + by);
  const GridD it = b - a;
  const GridD denom = alpha * alpha + ix.square() + iy.square();

  DenseFlow flow{GridD::Zero(h, w), GridD::Zero(h, w)};
  GridD u_next(h, w), v_next(h, w);
  for (int iter = 0; iter < iters; ++iter) {
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
      const int y = static_cast<int>(row);
      for (int x = 0; x < w; ++x) {
        const double ubar = 0.25 * (clamped_at(flow.u, x - 1, y) + clamped_at(flow.u, x + 1, y) +
                                    clamped_at(flow.u, x, y - 1) + clamped_at(flow.u, x, y + 1));
        const double vbar = 0.25 * (clamped_at(flow.v, x - 1, y) + clamped_at(flow.v, x + 1, y) +
                                    clamped_at(flow.v, x, y - 1) + clamped_at(flow.v, x, y + 1));
        const double t = (ix(y, x) * ubar + iy(y, x) * vbar + it(y, x)) / denom(y, x);
        u_next(y, x) = ubar - ix(y, x) * t;
        v_next(y, x) = vbar - iy(y, x) * t;
      }
    });
    flow.u.swap(u_next);
    flow.v.swap(v_next);
  }
  return flow;
}

DenseFlow block_match(const Frame& prev, const Frame& next, int block, int radius) {
  require_same_dims(prev, next, "block_match");
  if (block < 4) throw ParamError("block_match: block must be >= 4");
  if (radius < 1) throw ParamError("block_match: radius must be >= 1");
  const int w = prev.width();
  const int h = prev.height();
  const int bw = (w + block - 1) / block;
  const int bh = (h + block - 1) / block;
  DenseFlow flow{GridD::Zero(h, w), GridD::Zero(h, w)};

  parallel_for(static_cast<std::size_t>(bw * bh), [&](std::size_t bi) {
    const int x0 = static_cast<int>(bi % static_cast<std::size_t>(bw)) * block;
    const int y0 = static_cast<int>(bi / static_cast<std::size_t>(bw)) * block;
    const int x1 = std::min(x0 + block, w);
    const int y1 = std::min(y0 + block, h);
    long best_sad = std::numeric_limits<long>::max();
    int best_mag = 0;
    int best_dx = 0;
    int best_dy = 0;
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        long sad = 0;
        for (int y = y0; y < y1 && sad <= best_sad; ++y) {
          for (int x = x0; x < x1; ++x) {
            sad += std::abs(static_cast<int>(prev.pixels(y, x)) - static_cast<int>(clamped_at(next.pixels, x + dx, y + dy)));
          }
        }
        const int mag = dx * dx + dy * dy;
        // Row-major shift order is the scan order, so strict comparisons
        // realize the final tie-break.
        if (sad < best_sad || (sad == best_sad && mag < best_mag)) {
          best_sad = sad;
          best_mag = mag;
          best_dx = dx;
          best_dy = dy;
        }
      }
    }
    flow.u.block(y0, x0, y1 - y0, x1 - x0).setConstant(best_dx);
    flow.v.block(y0, x0, y1 - y0, x1 - x0).setConstant(best_dy);
  });
  return flow;
}

Eigen::Vector2d flow_at(const DenseFlow& flow, const Eigen::Vector2d& p) {
  const int x = static_cast<int>(std::lround(p.x()));
  const int y = static_cast<int>(std::lround(p.y()));
  return {clamped_at(flow.u, x, y), clamped_at(flow.v, x, y)};
}

FlowMethod parse_flow_method(const std::string& name) {
  if (name == "lk") return FlowMethod::kLucasKanade;
  if (name == "horn-schunck" || name == "horn_schunck") return FlowMethod::kHornSchunck;
  if (name == "block-match" || name == "block_match") return FlowMethod::kBlockMatch;
  if (name == "zero") return FlowMethod::kZero;
  throw ParamError("unknown flow method '" + name + "'");
}

std::string flow_method_name(FlowMethod m) {
  switch (m) {
    case FlowMethod::kLucasKanade:
      return "lk";
    case FlowMethod::kHornSchunck:
      return "horn-schunck";
    case FlowMethod::kBlockMatch:
      return "block-match";
    case FlowMethod::kZero:
      return "zero";
  }
  return "?";
}

std::vector<TrackedPoint> track_points(FlowMethod method, const Frame& prev, const Frame& next,
                                       const std::vector<Eigen::Vector2d>& points, const LkParams& lk,
                                       const DenseParams& dense) {
  if (method == FlowMethod::kLucasKanade) return lk_track(prev, next, points, lk);
  require_same_dims(prev, next, "track_points");
  DenseFlow flow;
  switch (method) {
    case FlowMethod::kHornSchunck:
      flow = horn_schunck(prev, next, dense.hs_alpha, dense.hs_iters);
      break;
    case FlowMethod::kBlockMatch:
      flow = block_match(prev, next, dense.bm_block, dense.bm_radius);
      break;
    default:
      flow = DenseFlow{GridD::Zero(prev.height(), prev.width()), GridD::Zero(prev.height(), prev.width())};
      break;
  }
  std::vector<TrackedPoint> out;
  out.reserve(points.size());
  for (const Eigen::Vector2d& pt : points) {
    TrackedPoint tp;
    tp.start = pt;
    if (pt.x() >= 0 && pt.y() >= 0 && pt.x() <= prev.width() - 1 && pt.y() <= prev.height() - 1) {
      tp.end = pt + flow_at(flow, pt);
      tp.status = TrackStatus::kTracked;
    }
    out.push_back(tp);
  }
  return out;
}

}  // namespace crowdflow
