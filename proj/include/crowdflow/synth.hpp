#pragma once

#include <cstdint>
#include <vector>

#include "crowdflow/blockfeat.hpp"
#include "crowdflow/imgio.hpp"
#include "crowdflow/motion.hpp"
#include "crowdflow/random.hpp"

namespace crowdflow {

// Vector-level stand-in for hand-labeled footage.
//
//   Lane             constant direction and speed (3-6 px).
//   Arc              rigid rotation about a center near the middle of the
//                    canvas; speed grows with radius, clamped to [1, 12] px.
//   ConvergeDiverge  radial flow toward or away from a center; speed falls
//                    off as 1/r (constant flux through circles), clamped.
//   RandomBlock      jittery near-stationary crowd: uniform directions,
//                    1-2 px.
struct SyntheticCase {
  MotionClass motion_class = MotionClass::kLane;
  int n_vectors = 512;
  double noise_sigma = 0.3;
  std::uint64_t seed = 42;
  int width = kWorkingSize;
  int height = kWorkingSize;

  void validate() const;
};

// Field parameters drawn from the case seed.
struct SyntheticField {
  MotionClass motion_class = MotionClass::kLane;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double sign = 1.0;        // Arc: +1 counterclockwise on screen; ConvergeDiverge: +1 diverging
  double lane_angle = 0.0;  // radians, math orientation
  double speed = 0.0;       // Lane speed, Arc angular rate, ConvergeDiverge flux

  // Noise-free displacement at a point (RandomBlock has none).
  Eigen::Vector2d displacement(const Eigen::Vector2d& p) const;
};

SyntheticField draw_field(const SyntheticCase& c, Rng& rng);

std::vector<MotionVector> gen_synthetic_field(const SyntheticCase& c);

struct SynthOptions {
  int per_class = 100;
  std::uint64_t seed = 42;
  double noise_sigma = 0.3;
  int n_vectors = 512;
  NoiseParams noise;
  BlockGridParams grid;
};

// per_class rows of every class, classes interleaved, labels attached;
// vectors pass through filter_noise before block extraction.
std::vector<BlockFeatureRow> synth_feature_rows(const SynthOptions& o);

// Pixel-level mode: Gaussian dots on a dark background moving along the
// case's field; displacement per keyframe interval equals the field.
std::vector<Frame> render_synthetic_sequence(const SyntheticCase& c, int n_frames, int stride, int n_dots = 300);

}  // namespace crowdflow
