#include "crowdflow/pipeline.hpp"

#include <string>

#include "crowdflow/error.hpp"

namespace crowdflow {

void PipelineParams::validate() const {
  if (stride < 1) throw ParamError("stride must be >= 1");
  corners.validate();
  lk.validate();
  noise.validate();
  mii.validate();
  grid.validate();
}

std::vector<std::pair<int, int>> keyframe_pairs(int n_frames, int stride) {
  if (stride < 1) throw ParamError("stride must be >= 1");
  if (n_frames < stride + 1) {
    throw DataError("sequence has " + std::to_string(n_frames) + " frames; stride " + std::to_string(stride) +
                    " needs at least " + std::to_string(stride + 1));
  }
  std::vector<std::pair<int, int>> out;
  for (int k = 0; k + stride < n_frames; k += stride) out.emplace_back(k, k + stride);
  return out;
}

std::vector<MotionVector> motion_between(const Frame& prev, const Frame& next, const PipelineParams& p) {
  const auto corners = detect_corners(prev, p.detector, p.corners);
  // LK needs the full window inside the image; dense methods take any point.
  const int margin = p.flow == FlowMethod::kLucasKanade ? p.lk.half_window() : 0;
  std::vector<Eigen::Vector2d> points;
  points.reserve(corners.size());
  for (const auto& c : corners) {
    if (c.x < margin || c.y < margin || c.x >= prev.width() - margin || c.y >= prev.height() - margin) continue;
    points.emplace_back(c.x, c.y);
  }
  const auto tracked = track_points(p.flow, prev, next, points, p.lk, p.dense);
  return filter_noise(make_vectors(tracked), p.noise);
}

std::vector<MiiFrame> render_mii_sequence(const std::vector<Frame>& frames, const PipelineParams& p) {
  p.validate();
  std::vector<MiiFrame> out;
  for (const auto& [a, b] : keyframe_pairs(static_cast<int>(frames.size()), p.stride)) {
    out.push_back({a, render_mii(motion_between(frames[a], frames[b], p), p.mii)});
  }
  return out;
}

std::vector<BlockFeatureRow> sequence_features(const std::vector<Frame>& frames, const PipelineParams& p) {
  p.validate();
  std::vector<BlockFeatureRow> out;
  for (const auto& [a, b] : keyframe_pairs(static_cast<int>(frames.size()), p.stride)) {
    out.push_back(extract_block_features(motion_between(frames[a], frames[b], p), p.grid, a));
  }
  return out;
}

}  // namespace crowdflow
