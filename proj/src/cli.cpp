#include "crowdflow/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "crowdflow/config.hpp"
#include "crowdflow/error.hpp"
#include "crowdflow/imgio.hpp"
#include "crowdflow/synth.hpp"

namespace crowdflow {
namespace {

namespace fs = std::filesystem;

std::string flag_of(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw DataError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Data to --out when given, else to the output stream.
void emit(const PipelineConfig& c, const std::string& text, std::ostream& out) {
  if (c.out.empty()) {
    out << text;
  } else {
    write_text(c.out, text);
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ParamError("missing required input: " + what);
}

std::vector<Frame> load_frames(const PipelineConfig& c) {
  require(!c.frames.empty(), "--frames");
  return prepare_frames(load_sequence(c.frames), c.width(), c.height());
}

std::vector<LabelSpan> load_labels(const PipelineConfig& c) {
  return c.labels.empty() ? std::vector<LabelSpan>{} : read_labels_csv(c.labels);
}

int cmd_corners(const PipelineConfig& c, std::ostream& out) {
  const auto frames = load_frames(c);
  std::string text = "frame_k,x,y,score\n";
  for (const auto& [a, b] : keyframe_pairs(static_cast<int>(frames.size()), c.pipeline.stride)) {
    (void)b;
    for (const auto& p : detect_corners(frames[a], c.pipeline.detector, c.pipeline.corners)) {
      text += std::to_string(a) + "," + fmt6(p.x) + "," + fmt6(p.y) + "," + fmt6(p.score) + "\n";
    }
  }
  emit(c, text, out);
  return kExitOk;
}

int cmd_flow(const PipelineConfig& c, std::ostream& out) {
  const auto frames = load_frames(c);
  const auto& p = c.pipeline;
  const int margin = p.flow == FlowMethod::kLucasKanade ? p.lk.half_window() : 0;
  std::string text = "frame_k,x0,y0,x1,y1,status,residual\n";
  for (const auto& [a, b] : keyframe_pairs(static_cast<int>(frames.size()), p.stride)) {
    std::vector<Eigen::Vector2d> pts;
    for (const auto& q : detect_corners(frames[a], p.detector, p.corners)) {
      if (q.x < margin || q.y < margin || q.x >= c.width() - margin || q.y >= c.height() - margin) continue;
      pts.emplace_back(q.x, q.y);
    }
    for (const auto& t : track_points(p.flow, frames[a], frames[b], pts, p.lk, p.dense)) {
      text += std::to_string(a) + "," + fmt6(t.start.x()) + "," + fmt6(t.start.y()) + "," + fmt6(t.end.x()) + "," +
              fmt6(t.end.y()) + "," + (t.tracked() ? "tracked" : "lost") + "," + fmt6(t.residual) + "\n";
    }
  }
  emit(c, text, out);
  return kExitOk;
}

int cmd_mii(const PipelineConfig& c) {
  require(!c.out.empty(), "--out (output directory)");
  const auto frames = load_frames(c);
  const auto spans = load_labels(c);
  fs::create_directories(c.out);
  std::string index = "frame_k,file,label\n";
  for (const auto& m : render_mii_sequence(frames, c.pipeline)) {
    const std::string name = "mii_" + std::to_string(m.frame_k) + ".ppm";
    write_ppm(c.out / name, m.image);
    const auto label = label_for(m.frame_k, spans);
    index += std::to_string(m.frame_k) + "," + name + "," + (label ? class_name(*label) : kUnlabeled) + "\n";
  }
  write_text(c.out / "mii_index.csv", index);
  return kExitOk;
}

std::vector<BlockFeatureRow> synthetic_rows(const PipelineConfig& c) {
  SynthOptions o;
  o.per_class = c.per_class;
  o.seed = c.seed;
  o.noise_sigma = c.noise_sigma;
  o.n_vectors = c.n_vectors;
  o.noise = c.pipeline.noise;
  o.grid = c.pipeline.grid;
  return synth_feature_rows(o);
}

int cmd_features(const PipelineConfig& c, std::ostream& out) {
  std::vector<BlockFeatureRow> rows;
  if (c.frames.empty()) {
    rows = synthetic_rows(c);
  } else {
    rows = sequence_features(load_frames(c), c.pipeline);
    label_rows(rows, load_labels(c));
  }
  emit(c, feature_csv(rows, c.pipeline.grid), out);
  return kExitOk;
}

struct SynthRender {
  fs::path dir;
  std::string motion_class = "Lane";
  int n_frames = 11;
};

int cmd_synth(const PipelineConfig& c, const SynthRender& r, std::ostream& out) {
  if (!r.dir.empty()) {
    SyntheticCase sc;
    sc.motion_class = parse_motion_class(r.motion_class);
    sc.seed = c.seed;
    sc.width = c.width();
    sc.height = c.height();
    fs::create_directories(r.dir);
    for (const auto& f : render_synthetic_sequence(sc, r.n_frames, c.pipeline.stride)) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%04d.pgm", f.index);
      write_pgm(r.dir / name, f);
    }
    return kExitOk;
  }
  emit(c, feature_csv(synthetic_rows(c), c.pipeline.grid), out);
  return kExitOk;
}

struct VectorInput {
  std::vector<MotionVector> vectors;
  std::optional<ClusterLabeling> truth;
};

// x,y,dx,dy[,truth] with a header line.
VectorInput read_vectors_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty vector CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool has_truth = line == "x,y,dx,dy,truth";
  if (!has_truth && line != "x,y,dx,dy") throw DataError(path.string() + ": expected header x,y,dx,dy[,truth]");
  VectorInput v;
  if (has_truth) v.truth.emplace();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != (has_truth ? 5u : 4u)) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": wrong column count");
    }
    try {
      std::size_t used = 0;
      double nums[4];
      for (int i = 0; i < 4; ++i) {
        nums[i] = std::stod(cells[i], &used);
        if (used != cells[i].size()) throw std::invalid_argument("trailing");
      }
      v.vectors.push_back(MotionVector::from({nums[0], nums[1]}, {nums[2], nums[3]}));
      if (has_truth) {
        const int t = std::stoi(cells[4], &used);
        if (used != cells[4].size()) throw std::invalid_argument("trailing");
        v.truth->push_back(t);
      }
    } catch (const std::logic_error&) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": not a number");
    }
  }
  return v;
}

int cmd_cluster(const PipelineConfig& c, const fs::path& vectors_path, int frame_k, std::ostream& out,
                std::ostream& err) {
  VectorInput in;
  if (!vectors_path.empty()) {
    in = read_vectors_csv(vectors_path);
  } else {
    const auto frames = load_frames(c);
    const auto pairs = keyframe_pairs(static_cast<int>(frames.size()), c.pipeline.stride);
    const auto it = std::find_if(pairs.begin(), pairs.end(), [&](const auto& p) { return p.first == frame_k; });
    if (it == pairs.end()) throw ParamError("--frame-k " + std::to_string(frame_k) + " is not a keyframe");
    in.vectors = motion_between(frames[it->first], frames[it->second], c.pipeline);
  }
  const ClusterLabeling labels = c.cluster_algo == "kmeans"
                                     ? kmeans(in.vectors, c.kmeans_k, c.seed, 100, c.dbscan.weights)
                                     : dbscan(in.vectors, c.dbscan);
  emit(c, cluster_csv(in.vectors, labels), out);
  if (in.truth) {
    const std::string line = "ari," + fmt6(adjusted_rand_index(labels, *in.truth)) + "\n";
    (c.out.empty() ? err : out) << line;
  }
  return kExitOk;
}

ml::Dataset load_dataset(const PipelineConfig& c) {
  require(!c.data.empty(), "--data");
  return ml::dataset_from_rows(read_feature_csv(c.data).rows);
}

ml::Split split_of(const ml::Dataset& d, const ml::TrainingSplit& s) {
  return s.by_span ? ml::split_dataset_by_span(d, s.train_fraction, s.seed)
                   : ml::split_dataset(d, s.train_fraction, s.seed);
}

int cmd_train(const PipelineConfig& c) {
  require(!c.out.empty(), "--out (model file)");
  const ml::Dataset d = load_dataset(c);
  const ml::Split s = split_of(d, c.split);
  ml::TrainedModel m = ml::fit(c.model_spec(), s.train);
  m.split = c.split;
  write_text(c.out, ml::model_to_json(m));
  return kExitOk;
}

int cmd_eval(const PipelineConfig& c, const fs::path& model_path, bool all_rows, std::ostream& out) {
  require(!model_path.empty(), "--model (model file)");
  const ml::TrainedModel m = ml::model_from_json(read_text(model_path));
  const ml::Dataset d = load_dataset(c);
  const ml::Dataset test = (all_rows || !m.split) ? d : split_of(d, *m.split).test;
  const ml::EvalReport r = ml::evaluate(m, test);
  const std::string json = ml::report_json(r, ml::family_name(m.spec.family()));
  if (c.out.empty()) {
    out << json;
  } else {
    write_text(c.out, json);
    out << ml::confusion_table(r);
  }
  return kExitOk;
}

int cmd_benchflow(const PipelineConfig& c, const std::optional<std::string>& method, const std::string& cases,
                  int trials, std::ostream& out) {
  if (trials < 1) throw ParamError("--trials must be >= 1");
  std::vector<std::string> methods;
  if (method) {
    methods.push_back(flow_method_name(parse_flow_method(*method)));
  } else {
    for (auto m : {FlowMethod::kLucasKanade, FlowMethod::kHornSchunck, FlowMethod::kBlockMatch, FlowMethod::kZero}) {
      methods.push_back(flow_method_name(m));
    }
  }
  std::vector<FlowCase> flow_cases;
  if (cases == "all") {
    flow_cases = {FlowCase::kStatic, FlowCase::kTranslation, FlowCase::kRotation, FlowCase::kDiverging};
  } else {
    flow_cases.push_back(parse_flow_case(cases));
  }
  std::string text = std::string(kFlowBenchHeader) + "\n";
  for (const auto fc : flow_cases) {
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(t);
      for (const auto& m : methods) text += bench_flow(m, fc, seed).csv_line() + "\n";
    }
  }
  emit(c, text, out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"crowdflow: crowd motion features and classifiers"};
  app.name("crowdflow");
  app.require_subcommand(1, 1);

  std::map<std::string, std::string> flag_values;
  fs::path config_path;
  fs::path vectors_path;
  fs::path model_path;
  int frame_k = 0;
  bool all_rows = false;
  SynthRender render;
  std::string bench_cases = "translation";
  int bench_trials = 5;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"corners", "detected corners per keyframe as CSV"},
      {"flow", "tracked points per keyframe pair as CSV"},
      {"mii", "motion information images plus index"},
      {"features", "block feature CSV from footage, or synthetic cases without --frames"},
      {"cluster", "cluster motion vectors; ARI when truth labels are given"},
      {"train", "fit a classifier on a feature CSV"},
      {"eval", "evaluate a saved model; report JSON"},
      {"benchflow", "optical flow benchmark CSV"},
      {"synth", "labeled synthetic feature CSV, or a rendered dot sequence"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file");
    for (const auto& key : config_schema()) {
      if (name == "eval" && key.name == "model") continue;
      sub->add_option(flag_of(key.name), flag_values[name + "/" + key.name], key.help);
    }
    if (name == "cluster") {
      sub->add_option("--vectors", vectors_path, "vector CSV x,y,dx,dy[,truth] instead of --frames");
      sub->add_option("--frame-k", frame_k, "keyframe whose pair is clustered (with --frames)");
    } else if (name == "eval") {
      sub->add_option("--model", model_path, "model file written by train");
      sub->add_flag("--all", all_rows, "evaluate every row instead of the held-out split");
    } else if (name == "synth") {
      sub->add_option("--render", render.dir, "write a pixel-level dot sequence here instead of a CSV");
      sub->add_option("--class", render.motion_class, "motion class of the rendered sequence");
      sub->add_option("--n-frames", render.n_frames, "frames in the rendered sequence");
    } else if (name == "benchflow") {
      sub->add_option("--case", bench_cases, "static, translation, rotation, diverging or all");
      sub->add_option("--trials", bench_trials, "seeds per case, starting at --seed");
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  try {
    ConfigValues values;
    if (!config_path.empty()) values = read_config_file(config_path);
    for (const auto& key : config_schema()) {
      if (cmd == "eval" && key.name == "model") continue;
      if (sub->count(flag_of(key.name)) > 0) values[key.name] = flag_values[cmd + "/" + key.name];
    }
    const PipelineConfig c = build_config(values);
    if (cmd == "corners") return cmd_corners(c, out);
    if (cmd == "flow") return cmd_flow(c, out);
    if (cmd == "mii") return cmd_mii(c);
    if (cmd == "features") return cmd_features(c, out);
    if (cmd == "cluster") return cmd_cluster(c, vectors_path, frame_k, out, err);
    if (cmd == "train") return cmd_train(c);
    if (cmd == "eval") return cmd_eval(c, model_path, all_rows, out);
    if (cmd == "synth") return cmd_synth(c, render, out);
    const auto method = values.count("flow") > 0 ? std::optional<std::string>(values.at("flow")) : std::nullopt;
    return cmd_benchflow(c, method, bench_cases, bench_trials, out);
  } catch (const ParamError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace crowdflow
