#pragma once

#include <utility>
#include <vector>

#include "crowdflow/blockfeat.hpp"
#include "crowdflow/corners.hpp"
#include "crowdflow/mii.hpp"
#include "crowdflow/motion.hpp"
#include "crowdflow/optflow.hpp"

namespace crowdflow {

struct PipelineParams {
  int stride = 5;  // keyframe interval s
  Detector detector = Detector::kShiTomasi;
  CornerParams corners;
  FlowMethod flow = FlowMethod::kLucasKanade;
  LkParams lk;
  DenseParams dense;
  NoiseParams noise;
  MiiParams mii;
  BlockGridParams grid;

  void validate() const;
};

// Keyframe pairs (k, k + s) for k = 0, s, 2s, ... while k + s < n_frames.
// Throws DataError when no pair fits.
std::vector<std::pair<int, int>> keyframe_pairs(int n_frames, int stride);

// Corners on prev, tracked into next, turned into filtered motion vectors.
std::vector<MotionVector> motion_between(const Frame& prev, const Frame& next, const PipelineParams& p);

struct MiiFrame {
  int frame_k = 0;
  RgbImage image;
};

std::vector<MiiFrame> render_mii_sequence(const std::vector<Frame>& frames, const PipelineParams& p);

// One unlabeled feature row per keyframe pair.
std::vector<BlockFeatureRow> sequence_features(const std::vector<Frame>& frames, const PipelineParams& p);

}  // namespace crowdflow
