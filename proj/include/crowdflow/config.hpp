#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdflow/ml.hpp"
#include "crowdflow/motion.hpp"
#include "crowdflow/pipeline.hpp"

namespace crowdflow {

enum class ConfigKind { kInt, kReal, kText };

struct ConfigKey {
  std::string name;  // snake_case; the matching flag uses dashes
  ConfigKind kind;
  std::string help;
};

// Every accepted key, in documentation order.
const std::vector<ConfigKey>& config_schema();

// Raw values keyed by schema name, as text.
using ConfigValues = std::map<std::string, std::string>;

// Flat JSON object -> raw values. Unknown keys and non-scalar values are
// ParamErrors naming the key; unreadable files are DataErrors.
ConfigValues parse_config_json(const std::string& text);
ConfigValues read_config_file(const std::filesystem::path& path);

struct PipelineConfig {
  PipelineParams pipeline;
  DbscanParams dbscan;
  std::string cluster_algo = "dbscan";
  int kmeans_k = 4;

  ml::Family family = ml::Family::kLogReg;
  std::optional<int> knn_k;
  std::optional<std::string> svm_kernel;
  std::optional<double> svm_c;
  std::optional<double> svm_gamma;
  std::optional<int> n_trees;
  std::optional<int> max_depth;
  ml::TrainingSplit split;

  std::uint64_t seed = 42;
  int per_class = 100;
  double noise_sigma = 0.3;
  int n_vectors = 512;

  std::filesystem::path frames;
  std::filesystem::path labels;
  std::filesystem::path data;
  std::filesystem::path out;

  int width() const { return pipeline.grid.width; }
  int height() const { return pipeline.grid.height; }

  // Family defaults with the applicable overrides and the config seed.
  ml::ModelSpec model_spec() const;
};

// Applies values over defaults; violations are ParamErrors of the form
// "config key 'name': reason".
PipelineConfig build_config(const ConfigValues& values);

}  // namespace crowdflow
