#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crowdflow/imgio.hpp"
#include "crowdflow/motion.hpp"

namespace crowdflow {

enum class MotionClass { kArc, kLane, kConvergeDiverge, kRandomBlock };

inline constexpr int kMotionClassCount = 4;
inline constexpr std::array<const char*, kMotionClassCount> kMotionClassNames = {"Arc", "Lane", "ConvergeDiverge",
                                                                                 "RandomBlock"};
inline constexpr const char* kUnlabeled = "Unlabeled";

std::string class_name(MotionClass c);
MotionClass parse_motion_class(const std::string& name);  // throws DataError

enum class BlockMode { kDominant, kHistogram };

std::string mode_name(BlockMode m);
BlockMode parse_block_mode(const std::string& name);

struct BlockGridParams {
  int grid_n = 8;
  BlockMode mode = BlockMode::kDominant;
  int width = kWorkingSize;  // canvas the vectors live on
  int height = kWorkingSize;

  void validate() const;
  int values_per_block() const { return mode == BlockMode::kDominant ? 2 : kDirectionBins + 1; }
  int feature_count() const { return grid_n * grid_n * values_per_block(); }
};

struct BlockFeatureRow {
  int frame_k = 0;
  std::vector<double> features;
  std::optional<MotionClass> label;  // empty = Unlabeled
};

// Vectors belong to the block containing their start point; blocks are
// ceil(dim / grid_n) px with the last block truncated. Dominant mode emits
// (most frequent bin, mean magnitude) per block, lowest bin on ties and
// (-1, 0) for empty blocks. Histogram mode emits 12 bin counts + mean magnitude.
BlockFeatureRow extract_block_features(const std::vector<MotionVector>& vs, const BlockGridParams& p, int frame_k = 0);

struct LabelSpan {
  int start_frame = 0;
  int end_frame = 0;  // inclusive
  MotionClass label = MotionClass::kArc;
};

// Throws ParamError on overlapping or inverted spans.
void label_rows(std::vector<BlockFeatureRow>& rows, const std::vector<LabelSpan>& spans);
std::optional<MotionClass> label_for(int frame_k, const std::vector<LabelSpan>& spans);

// start_frame,end_frame,label
std::vector<LabelSpan> read_labels_csv(const std::filesystem::path& path);

std::string feature_csv_header(const BlockGridParams& p);
std::string feature_csv(const std::vector<BlockFeatureRow>& rows, const BlockGridParams& p);
void write_feature_csv(const std::vector<BlockFeatureRow>& rows, const BlockGridParams& p,
                       const std::filesystem::path& path);

struct FeatureTable {
  BlockGridParams params;
  std::vector<BlockFeatureRow> rows;  // frame_k = data-line ordinal
};

FeatureTable parse_feature_csv(const std::string& text);
FeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace crowdflow
