#include "crowdflow/synth.hpp"

#include <algorithm>
#include <cmath>

#include "crowdflow/error.hpp"

namespace crowdflow {
namespace {

constexpr double kMinSpeed = 1.0;
constexpr double kMaxSpeed = 12.0;
constexpr double kJitterMin = 1.0;  // RandomBlock speed range
constexpr double kJitterMax = 2.0;

// Rotates a screen-space vector by +90 degrees in math orientation.
Eigen::Vector2d rotate_ccw(const Eigen::Vector2d& v) { return {v.y(), -v.x()}; }

}  // namespace

void SyntheticCase::validate() const {
  if (n_vectors < 1) throw ParamError("synthetic n_vectors must be >= 1");
  if (!(noise_sigma >= 0.0)) throw ParamError("synthetic noise_sigma must be >= 0");
  if (width < 2 || height < 2) throw ParamError("synthetic canvas too small");
}

SyntheticField draw_field(const SyntheticCase& c, Rng& rng) {
  SyntheticField f;
  f.motion_class = c.motion_class;
  f.center = {rng.uniform(0.35, 0.65) * (c.width - 1), rng.uniform(0.35, 0.65) * (c.height - 1)};
  f.sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  f.lane_angle = rng.uniform(0.0, 2.0 * M_PI);
  switch (c.motion_class) {
    case MotionClass::kLane:
      f.speed = rng.uniform(3.0, 6.0);
      break;
    case MotionClass::kArc:
      f.speed = rng.uniform(0.04, 0.08);
      break;
    case MotionClass::kConvergeDiverge:
      f.speed = rng.uniform(300.0, 500.0);
      break;
    case MotionClass::kRandomBlock:
      f.speed = 0.0;
      break;
  }
  return f;
}

Eigen::Vector2d SyntheticField::displacement(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d radial = p - center;
  const double r = radial.norm();
  switch (motion_class) {
    case MotionClass::kLane:
      return speed * Eigen::Vector2d(std::cos(lane_angle), -std::sin(lane_angle));
    case MotionClass::kArc: {
      if (r == 0.0) return Eigen::Vector2d::Zero();
      const double mag = std::clamp(speed * r, kMinSpeed, kMaxSpeed);
      return sign * mag * rotate_ccw(radial / r);
    }
    case MotionClass::kConvergeDiverge: {
      if (r == 0.0) return Eigen::Vector2d::Zero();
      const double mag = std::clamp(speed / std::max(r, 10.0), kMinSpeed, kMaxSpeed);
      return sign * mag * (radial / r);
    }
    case MotionClass::kRandomBlock:
      return Eigen::Vector2d::Zero();
  }
  return Eigen::Vector2d::Zero();
}

std::vector<MotionVector> gen_synthetic_field(const SyntheticCase& c) {
  c.validate();
  Rng rng(c.seed);
  const SyntheticField field = draw_field(c, rng);
  std::vector<MotionVector> out;
  out.reserve(static_cast<std::size_t>(c.n_vectors));
  while (static_cast<int>(out.size()) < c.n_vectors) {
    const Eigen::Vector2d start(rng.uniform(0.0, c.width - 1.0), rng.uniform(0.0, c.height - 1.0));
    Eigen::Vector2d d;
    if (c.motion_class == MotionClass::kRandomBlock) {
      const double ang = rng.uniform(0.0, 2.0 * M_PI);
      d = rng.uniform(kJitterMin, kJitterMax) * Eigen::Vector2d(std::cos(ang), -std::sin(ang));
    } else {
      d = field.displacement(start);
    }
    if (c.noise_sigma > 0.0) d += c.noise_sigma * Eigen::Vector2d(rng.normal(), rng.normal());
    if (d.x() == 0.0 && d.y() == 0.0) continue;  // resample
    out.push_back(MotionVector::from(start, d));
  }
  return out;
}

std::vector<BlockFeatureRow> synth_feature_rows(const SynthOptions& o) {
  if (o.per_class < 0) throw ParamError("per_class must be >= 0");
  std::vector<BlockFeatureRow> rows;
  rows.reserve(static_cast<std::size_t>(o.per_class) * kMotionClassCount);
  int k = 0;
  for (int i = 0; i < o.per_class; ++i) {
    for (int c = 0; c < kMotionClassCount; ++c, ++k) {
      SyntheticCase sc;
      sc.motion_class = static_cast<MotionClass>(c);
      sc.n_vectors = o.n_vectors;
      sc.noise_sigma = o.noise_sigma;
      sc.seed = derive_seed(o.seed, static_cast<std::uint64_t>(k));
      sc.width = o.grid.width;
      sc.height = o.grid.height;
      BlockFeatureRow row = extract_block_features(filter_noise(gen_synthetic_field(sc), o.noise), o.grid, k);
      row.label = sc.motion_class;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<Frame> render_synthetic_sequence(const SyntheticCase& c, int n_frames, int stride, int n_dots) {
  c.validate();
  if (n_frames < 1 || stride < 1 || n_dots < 0) throw ParamError("render_synthetic_sequence: bad sizes");
  Rng rng(c.seed);
  const SyntheticField field = draw_field(c, rng);
  std::vector<Eigen::Vector2d> starts, deltas;
  for (int i = 0; i < n_dots; ++i) {
    const Eigen::Vector2d s(rng.uniform(0.0, c.width - 1.0), rng.uniform(0.0, c.height - 1.0));
    Eigen::Vector2d d = field.displacement(s);
    if (c.motion_class == MotionClass::kRandomBlock) {
      const double ang = rng.uniform(0.0, 2.0 * M_PI);
      d = rng.uniform(kJitterMin, kJitterMax) * Eigen::Vector2d(std::cos(ang), -std::sin(ang));
    }
    starts.push_back(s);
    deltas.push_back(d);
  }
  constexpr double kSigma = 1.6;
  constexpr int kRadius = 5;
  std::vector<Frame> frames;
  for (int t = 0; t < n_frames; ++t) {
    GridD canvas = GridD::Constant(c.height, c.width, 30.0);
    const double phase = static_cast<double>(t) / stride;
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const Eigen::Vector2d p = starts[i] + phase * deltas[i];
      const int cx = static_cast<int>(std::lround(p.x()));
      const int cy = static_cast<int>(std::lround(p.y()));
      for (int y = cy - kRadius; y <= cy + kRadius; ++y) {
        for (int x = cx - kRadius; x <= cx + kRadius; ++x) {
          if (x < 0 || y < 0 || x >= c.width || y >= c.height) continue;
          const double d2 = (Eigen::Vector2d(x, y) - p).squaredNorm();
          canvas(y, x) += 180.0 * std::exp(-d2 / (2.0 * kSigma * kSigma));
        }
      }
    }
    Frame f;
    f.index = t;
    f.pixels = canvas.min(255.0).round().cast<std::uint8_t>();
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace crowdflow
