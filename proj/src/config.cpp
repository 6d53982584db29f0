#include "crowdflow/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "crowdflow/error.hpp"

namespace crowdflow {
namespace {

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

struct Entry {
  ConfigKey key;
  Setter set;
};

long long to_int(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParamError("expected an integer, got '" + s + "'");
  return v;
}

double to_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) throw ParamError("expected a number, got '" + s + "'");
  return v;
}

int int_at_least(const std::string& s, long long lo) {
  const long long v = to_int(s);
  if (v < lo || v > 1'000'000'000) throw ParamError("must be an integer >= " + std::to_string(lo));
  return static_cast<int>(v);
}

double positive(const std::string& s) {
  const double v = to_real(s);
  if (!(v > 0.0)) throw ParamError("must be > 0");
  return v;
}

double non_negative(const std::string& s) {
  const double v = to_real(s);
  if (!(v >= 0.0)) throw ParamError("must be >= 0");
  return v;
}

// Schema keys set on a PipelineConfig. Family-specific model keys are
// applied only when the chosen family uses them.
const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {{"width", ConfigKind::kInt, "working frame width"},
       [](PipelineConfig& c, const std::string& v) {
         const int w = int_at_least(v, 16);
         c.pipeline.grid.width = c.pipeline.mii.width = w;
       }},
      {{"height", ConfigKind::kInt, "working frame height"},
       [](PipelineConfig& c, const std::string& v) {
         const int h = int_at_least(v, 16);
         c.pipeline.grid.height = c.pipeline.mii.height = h;
       }},
      {{"stride", ConfigKind::kInt, "keyframe interval in frames"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.stride = c.pipeline.lk.stride = int_at_least(v, 1); }},
      {{"detector", ConfigKind::kText, "corner detector: shi-tomasi or fast"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.detector = parse_detector(v); }},
      {{"max_corners", ConfigKind::kInt, "corner budget per keyframe"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.corners.max_corners = int_at_least(v, 1); }},
      {{"quality_level", ConfigKind::kReal, "Shi-Tomasi relative score cutoff in (0, 1]"},
       [](PipelineConfig& c, const std::string& v) {
         const double q = positive(v);
         if (q > 1.0) throw ParamError("must be in (0, 1]");
         c.pipeline.corners.quality_level = q;
       }},
      {{"min_distance", ConfigKind::kReal, "minimum corner spacing in px"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.corners.min_distance = non_negative(v); }},
      {{"block_size", ConfigKind::kInt, "structure tensor window, odd"},
       [](PipelineConfig& c, const std::string& v) {
         const int b = int_at_least(v, 1);
         if (b % 2 == 0) throw ParamError("must be odd");
         c.pipeline.corners.block_size = b;
       }},
      {{"fast_threshold", ConfigKind::kInt, "FAST intensity threshold"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.corners.fast_threshold = int_at_least(v, 1); }},
      {{"fast_arc", ConfigKind::kInt, "FAST contiguous arc length (9-16)"},
       [](PipelineConfig& c, const std::string& v) {
         const int a = int_at_least(v, 9);
         if (a > 16) throw ParamError("must be in [9, 16]");
         c.pipeline.corners.fast_arc = a;
       }},
      {{"flow", ConfigKind::kText, "optical flow: lk, horn-schunck, block-match or zero"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.flow = parse_flow_method(v); }},
      {{"lk_window", ConfigKind::kInt, "Lucas-Kanade window side, odd"},
       [](PipelineConfig& c, const std::string& v) {
         const int w = int_at_least(v, 3);
         if (w % 2 == 0) throw ParamError("must be odd");
         c.pipeline.lk.window = w;
       }},
      {{"pyramid_levels", ConfigKind::kInt, "Lucas-Kanade pyramid levels"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.lk.pyramid_levels = int_at_least(v, 1); }},
      {{"lk_max_iters", ConfigKind::kInt, "Lucas-Kanade iterations per level"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.lk.max_iters = int_at_least(v, 1); }},
      {{"lk_epsilon", ConfigKind::kReal, "Lucas-Kanade update-norm stop in px"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.lk.epsilon = positive(v); }},
      {{"min_eigen", ConfigKind::kReal, "Lucas-Kanade per-pixel eigenvalue floor"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.lk.min_eigen = non_negative(v); }},
      {{"hs_alpha", ConfigKind::kReal, "Horn-Schunck smoothness weight"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.dense.hs_alpha = positive(v); }},
      {{"hs_iters", ConfigKind::kInt, "Horn-Schunck iterations"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.dense.hs_iters = int_at_least(v, 1); }},
      {{"bm_block", ConfigKind::kInt, "block matching block side"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.dense.bm_block = int_at_least(v, 1); }},
      {{"bm_radius", ConfigKind::kInt, "block matching search radius"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.dense.bm_radius = int_at_least(v, 0); }},
      {{"min_magnitude", ConfigKind::kReal, "noise filter lower bound in px"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.noise.min_magnitude = non_negative(v); }},
      {{"max_magnitude", ConfigKind::kReal, "noise filter upper bound in px"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.noise.max_magnitude = positive(v); }},
      {{"grid", ConfigKind::kInt, "feature grid side n (n x n blocks)"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.grid.grid_n = int_at_least(v, 1); }},
      {{"mode", ConfigKind::kText, "block features: dominant or histogram"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.grid.mode = parse_block_mode(v); }},
      {{"mii_multiplier", ConfigKind::kReal, "MII magnitude multiplier"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.mii.magnitude_multiplier = positive(v); }},
      {{"mii_gain", ConfigKind::kReal, "MII brightness per px of magnitude"},
       [](PipelineConfig& c, const std::string& v) { c.pipeline.mii.gain = positive(v); }},
      {{"cluster_algo", ConfigKind::kText, "clustering: dbscan or kmeans"},
       [](PipelineConfig& c, const std::string& v) {
         if (v != "dbscan" && v != "kmeans") throw ParamError("must be dbscan or kmeans");
         c.cluster_algo = v;
       }},
      {{"dbscan_eps", ConfigKind::kReal, "DBSCAN neighborhood radius"},
       [](PipelineConfig& c, const std::string& v) { c.dbscan.eps = positive(v); }},
      {{"dbscan_min_pts", ConfigKind::kInt, "DBSCAN core threshold (self included)"},
       [](PipelineConfig& c, const std::string& v) { c.dbscan.min_pts = int_at_least(v, 1); }},
      {{"kmeans_k", ConfigKind::kInt, "K-Means cluster count"},
       [](PipelineConfig& c, const std::string& v) { c.kmeans_k = int_at_least(v, 1); }},
      {{"model", ConfigKind::kText, "classifier family: logreg, svm, knn, gnb, perceptron, sgd, dtree, rforest"},
       [](PipelineConfig& c, const std::string& v) { c.family = ml::parse_family(v); }},
      {{"knn_k", ConfigKind::kInt, "neighbors for knn"},
       [](PipelineConfig& c, const std::string& v) { c.knn_k = int_at_least(v, 1); }},
      {{"svm_kernel", ConfigKind::kText, "svm kernel: linear, rbf or poly"},
       [](PipelineConfig& c, const std::string& v) {
         (void)ml::parse_kernel(v);
         c.svm_kernel = v;
       }},
      {{"svm_c", ConfigKind::kReal, "svm box constraint"},
       [](PipelineConfig& c, const std::string& v) { c.svm_c = positive(v); }},
      {{"svm_gamma", ConfigKind::kReal, "svm kernel gamma (0 = 1/features)"},
       [](PipelineConfig& c, const std::string& v) { c.svm_gamma = non_negative(v); }},
      {{"n_trees", ConfigKind::kInt, "random forest size"},
       [](PipelineConfig& c, const std::string& v) { c.n_trees = int_at_least(v, 1); }},
      {{"max_depth", ConfigKind::kInt, "tree depth limit for dtree and rforest"},
       [](PipelineConfig& c, const std::string& v) { c.max_depth = int_at_least(v, 1); }},
      {{"train_fraction", ConfigKind::kReal, "training share of the split in (0, 1)"},
       [](PipelineConfig& c, const std::string& v) {
         const double f = to_real(v);
         if (!(f > 0.0 && f < 1.0)) throw ParamError("must be in (0, 1)");
         c.split.train_fraction = f;
       }},
      {{"split", ConfigKind::kText, "split unit: row or span"},
       [](PipelineConfig& c, const std::string& v) {
         if (v != "row" && v != "span") throw ParamError("must be row or span");
         c.split.by_span = v == "span";
       }},
      {{"seed", ConfigKind::kInt, "seed for every randomized stage"},
       [](PipelineConfig& c, const std::string& v) {
         const long long s = to_int(v);
         if (s < 0) throw ParamError("must be >= 0");
         c.seed = c.split.seed = static_cast<std::uint64_t>(s);
       }},
      {{"per_class", ConfigKind::kInt, "synthetic cases per class"},
       [](PipelineConfig& c, const std::string& v) { c.per_class = int_at_least(v, 1); }},
      {{"noise_sigma", ConfigKind::kReal, "synthetic displacement noise in px"},
       [](PipelineConfig& c, const std::string& v) { c.noise_sigma = non_negative(v); }},
      {{"n_vectors", ConfigKind::kInt, "synthetic vectors per case"},
       [](PipelineConfig& c, const std::string& v) { c.n_vectors = int_at_least(v, 1); }},
      {{"frames", ConfigKind::kText, "input frame directory"},
       [](PipelineConfig& c, const std::string& v) { c.frames = v; }},
      {{"labels", ConfigKind::kText, "label span CSV"},
       [](PipelineConfig& c, const std::string& v) { c.labels = v; }},
      {{"data", ConfigKind::kText, "feature CSV for train and eval"},
       [](PipelineConfig& c, const std::string& v) { c.data = v; }},
      {{"out", ConfigKind::kText, "output file or directory"},
       [](PipelineConfig& c, const std::string& v) { c.out = v; }},
  };
  return table;
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

ConfigValues parse_config_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("config must be a JSON object");
  ConfigValues out;
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& k : config_schema()) known = known || k.name == key;
    if (!known) throw ParamError("config key '" + key + "': unknown key");
    if (value.is_string()) {
      out[key] = value.get<std::string>();
    } else if (value.is_number_integer() || value.is_number_unsigned()) {
      out[key] = value.dump();
    } else if (value.is_number_float()) {
      std::ostringstream s;
      s.precision(17);
      s << value.get<double>();
      out[key] = s.str();
    } else {
      throw ParamError("config key '" + key + "': expected a string or number");
    }
  }
  return out;
}

ConfigValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read config " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config_json(s.str());
}

PipelineConfig build_config(const ConfigValues& values) {
  PipelineConfig c;
  for (const auto& [key, _] : values) {
    bool known = false;
    for (const auto& k : config_schema()) known = known || k.name == key;
    if (!known) throw ParamError("config key '" + key + "': unknown key");
  }
  for (const auto& e : entries()) {
    const auto it = values.find(e.key.name);
    if (it == values.end()) continue;
    try {
      e.set(c, it->second);
    } catch (const std::exception& ex) {
      throw ParamError("config key '" + e.key.name + "': " + ex.what());
    }
  }
  c.pipeline.validate();
  if (c.pipeline.noise.min_magnitude > c.pipeline.noise.max_magnitude) {
    throw ParamError("config key 'min_magnitude': exceeds max_magnitude");
  }
  return c;
}

ml::ModelSpec PipelineConfig::model_spec() const {
  ml::ModelSpec spec = ml::default_spec(family, seed);
  if (auto* p = std::get_if<ml::KnnParams>(&spec.params)) {
    if (knn_k) p->k = *knn_k;
  } else if (auto* p = std::get_if<ml::SvmParams>(&spec.params)) {
    if (svm_kernel) p->kernel = ml::parse_kernel(*svm_kernel);
    if (svm_c) p->c = *svm_c;
    if (svm_gamma) p->gamma = *svm_gamma;
  } else if (auto* p = std::get_if<ml::TreeParams>(&spec.params)) {
    if (max_depth) p->max_depth = *max_depth;
  } else if (auto* p = std::get_if<ml::ForestParams>(&spec.params)) {
    if (max_depth) p->tree.max_depth = *max_depth;
    if (n_trees) p->n_trees = *n_trees;
  }
  spec.validate();
  return spec;
}

}  // namespace crowdflow
