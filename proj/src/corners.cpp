#include "crowdflow/corners.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "crowdflow/error.hpp"
#include "crowdflow/parallel.hpp"

namespace crowdflow {
namespace {

struct Candidate {
  double score;
  int x;
  int y;
};

void sort_candidates(std::vector<Candidate>& c, int width) {
  std::sort(c.begin(), c.end(), [width](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.y * width + a.x < b.y * width + b.x;
  });
}

// Longest circular run of circle pixels with the given sign, and the sum of
// absolute contrasts over that run.
struct Arc {
  int length = 0;
  double contrast = 0.0;
};

Arc longest_arc(const int (&diff)[16], int threshold, bool brighter) {
  auto passes = [&](int i) { return brighter ? diff[i] > threshold : diff[i] < -threshold; };
  int start = -1;
  for (int i = 0; i < 16; ++i) {
    if (!passes(i)) {
      start = i;
      break;
    }
  }
  Arc best;
  if (start < 0) {
    best.length = 16;
    for (int i = 0; i < 16; ++i) best.contrast += std::abs(diff[i]);
    return best;
  }
  Arc run;
  for (int k = 1; k <= 16; ++k) {
    const int i = (start + k) % 16;
    if (passes(i)) {
      ++run.length;
      run.contrast += std::abs(diff[i]);
      if (run.length > best.length) best = run;
    } else {
      run = Arc{};
    }
  }
  return best;
}

}  // namespace

void CornerParams::validate() const {
  if (max_corners < 1) throw ParamError("max_corners must be >= 1");
  if (!(quality_level > 0.0 && quality_level <= 1.0)) throw ParamError("quality_level must be in (0, 1]");
  if (min_distance < 0.0) throw ParamError("min_distance must be >= 0");
  if (block_size < 1 || block_size % 2 == 0) throw ParamError("block_size must be odd and >= 1");
  if (fast_arc < 9 || fast_arc > 16) throw ParamError("fast_arc must be in [9, 16]");
  if (fast_threshold < 0) throw ParamError("fast_threshold must be >= 0");
}

GridD min_eigenvalue_map(const Frame& f, int block_size) {
  const int w = f.width();
  const int h = f.height();
  const GridD img = f.pixels.cast<double>();
  GridD ixx = GridD::Zero(h, w);
  GridD iyy = GridD::Zero(h, w);
  GridD ixy = GridD::Zero(h, w);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const double gx = (img(y - 1, x + 1) + 2 * img(y, x + 1) + img(y + 1, x + 1)) -
                        (img(y - 1, x - 1) + 2 * img(y, x - 1) + img(y + 1, x - 1));
      const double gy = (img(y + 1, x - 1) + 2 * img(y + 1, x) + img(y + 1, x + 1)) -
                        (img(y - 1, x - 1) + 2 * img(y - 1, x) + img(y - 1, x + 1));
      ixx(y, x) = gx * gx;
      iyy(y, x) = gy * gy;
      ixy(y, x) = gx * gy;
    }
  }
  const int r = block_size / 2;
  const int margin = 1 + r;
  GridD score = GridD::Zero(h, w);
  for (int y = margin; y + margin < h; ++y) {
    for (int x = margin; x + margin < w; ++x) {
      const double a = ixx.block(y - r, x - r, block_size, block_size).sum();
      const double c = iyy.block(y - r, x - r, block_size, block_size).sum();
      const double b = ixy.block(y - r, x - r, block_size, block_size).sum();
      const double half_diff = 0.5 * (a - c);
      const double lambda_min = 0.5 * (a + c) - std::sqrt(half_diff * half_diff + b * b);
      score(y, x) = std::max(0.0, lambda_min);
    }
  }
  return score;
}

std::vector<CornerPoint> detect_shi_tomasi(const Frame& f, const CornerParams& p) {
  p.validate();
  if (f.width() < p.block_size + 2 || f.height() < p.block_size + 2) {
    throw ParamError("detect_shi_tomasi: frame too small for block_size " + std::to_string(p.block_size));
  }
  const GridD score = min_eigenvalue_map(f, p.block_size);
  const double max_score = score.maxCoeff();
  if (max_score <= 0.0) return {};
  const double cutoff = p.quality_level * max_score;

  std::vector<Candidate> candidates;
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      if (score(y, x) > 0.0 && score(y, x) >= cutoff) candidates.push_back({score(y, x), x, y});
    }
  }
  sort_candidates(candidates, f.width());

  std::vector<CornerPoint> kept;
  const double min_d2 = p.min_distance * p.min_distance;
  for (const Candidate& c : candidates) {
    bool clear = true;
    for (const CornerPoint& k : kept) {
      const double dx = k.x - c.x;
      const double dy = k.y - c.y;
      if (dx * dx + dy * dy < min_d2) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;
    kept.push_back({static_cast<double>(c.x), static_cast<double>(c.y), c.score});
    if (static_cast<int>(kept.size()) >= p.max_corners) break;
  }
  return kept;
}

std::vector<CornerPoint> detect_fast(const Frame& f, const CornerParams& p) {
  p.validate();
  const int w = f.width();
  const int h = f.height();
  if (w < 7 || h < 7) throw ParamError("detect_fast: frame must be at least 7x7");

  GridD score = GridD::Zero(h, w);
  parallel_for(static_cast<std::size_t>(h - 6), [&](std::size_t row) {
    const int y = static_cast<int>(row) + 3;
    for (int x = 3; x + 3 < w; ++x) {
      const int center = f.pixels(y, x);
      int diff[16];
      for (int i = 0; i < 16; ++i) diff[i] = f.pixels(y + kFastCircle[i][1], x + kFastCircle[i][0]) - center;
      const Arc bright = longest_arc(diff, p.fast_threshold, true);
      const Arc dark = longest_arc(diff, p.fast_threshold, false);
      // With an arc of at least 9 of 16 pixels only one side can qualify.
      if (bright.length >= p.fast_arc) {
        score(y, x) = bright.contrast;
      } else if (dark.length >= p.fast_arc) {
        score(y, x) = dark.contrast;
      }
    }
  });

  std::vector<Candidate> candidates;
  for (int y = 3; y + 3 < h; ++y) {
    for (int x = 3; x + 3 < w; ++x) {
      const double s = score(y, x);
      if (s <= 0.0) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double n = score(y + dy, x + dx);
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (n > s || (n == s && earlier)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({s, x, y});
    }
  }
  sort_candidates(candidates, w);
  std::vector<CornerPoint> out;
  out.reserve(candidates.size());
  for (const Candidate& c : candidates) out.push_back({static_cast<double>(c.x), static_cast<double>(c.y), c.score});
  return out;
}

std::vector<CornerPoint> detect_corners(const Frame& f, Detector d, const CornerParams& p) {
  std::vector<CornerPoint> pts = d == Detector::kShiTomasi ? detect_shi_tomasi(f, p) : detect_fast(f, p);
  if (static_cast<int>(pts.size()) > p.max_corners) pts.resize(static_cast<std::size_t>(p.max_corners));
  return pts;
}

Detector parse_detector(const std::string& name) {
  if (name == "shi-tomasi" || name == "shi_tomasi") return Detector::kShiTomasi;
  if (name == "fast") return Detector::kFast;
  throw ParamError("unknown detector '" + name + "' (expected shi-tomasi or fast)");
}

std::string detector_name(Detector d) { return d == Detector::kFast ? "fast" : "shi-tomasi"; }

}  // namespace crowdflow
