#include "crowdflow/blockfeat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "crowdflow/error.hpp"

namespace crowdflow {
namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t begin = 0;
  for (;;) {
    const std::size_t comma = line.find(',', begin);
    cells.push_back(line.substr(begin, comma == std::string::npos ? std::string::npos : comma - begin));
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return cells;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::string format_mag(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double parse_number(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
  }
  return v;
}

long parse_integer(const std::string& cell, std::size_t line_no) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw DataError("line " + std::to_string(line_no) + ": expected integer, got '" + cell + "'");
  }
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string class_name(MotionClass c) { return kMotionClassNames[static_cast<std::size_t>(c)]; }

MotionClass parse_motion_class(const std::string& name) {
  for (std::size_t i = 0; i < kMotionClassNames.size(); ++i) {
    if (name == kMotionClassNames[i]) return static_cast<MotionClass>(i);
  }
  throw DataError("unknown motion class '" + name + "'");
}

std::string mode_name(BlockMode m) { return m == BlockMode::kDominant ? "dominant" : "histogram"; }

BlockMode parse_block_mode(const std::string& name) {
  if (name == "dominant") return BlockMode::kDominant;
  if (name == "histogram") return BlockMode::kHistogram;
  throw ParamError("unknown block mode '" + name + "'");
}

void BlockGridParams::validate() const {
  if (grid_n < 1) throw ParamError("grid must be >= 1");
  if (width < 1 || height < 1) throw ParamError("block canvas must be non-empty");
}

BlockFeatureRow extract_block_features(const std::vector<MotionVector>& vs, const BlockGridParams& p, int frame_k) {
  p.validate();
  const int n = p.grid_n;
  const int bw = (p.width + n - 1) / n;
  const int bh = (p.height + n - 1) / n;
  const auto cells = static_cast<std::size_t>(n) * n;
  std::vector<std::array<int, kDirectionBins>> counts(cells, std::array<int, kDirectionBins>{});
  std::vector<double> mag_sum(cells, 0.0);
  std::vector<int> total(cells, 0);
  for (const MotionVector& v : vs) {
    if (v.bin < 0) continue;
    const int bx = std::clamp(static_cast<int>(std::floor(v.start.x() / bw)), 0, n - 1);
    const int by = std::clamp(static_cast<int>(std::floor(v.start.y() / bh)), 0, n - 1);
    const auto c = static_cast<std::size_t>(by) * n + bx;
    ++counts[c][static_cast<std::size_t>(v.bin)];
    mag_sum[c] += v.magnitude;
    ++total[c];
  }

  BlockFeatureRow row;
  row.frame_k = frame_k;
  row.features.reserve(static_cast<std::size_t>(p.feature_count()));
  for (std::size_t c = 0; c < cells; ++c) {
    const double mean = total[c] > 0 ? mag_sum[c] / total[c] : 0.0;
    if (p.mode == BlockMode::kDominant) {
      int dominant = -1;
      if (total[c] > 0) {
        dominant = static_cast<int>(std::max_element(counts[c].begin(), counts[c].end()) - counts[c].begin());
      }
      row.features.push_back(dominant);
      row.features.push_back(mean);
    } else {
      for (int k : counts[c]) row.features.push_back(k);
      row.features.push_back(mean);
    }
  }
  return row;
}

std::optional<MotionClass> label_for(int frame_k, const std::vector<LabelSpan>& spans) {
  for (const LabelSpan& s : spans) {
    if (frame_k >= s.start_frame && frame_k <= s.end_frame) return s.label;
  }
  return std::nullopt;
}

void label_rows(std::vector<BlockFeatureRow>& rows, const std::vector<LabelSpan>& spans) {
  std::vector<LabelSpan> sorted = spans;
  std::sort(sorted.begin(), sorted.end(),
            [](const LabelSpan& a, const LabelSpan& b) { return a.start_frame < b.start_frame; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].start_frame > sorted[i].end_frame) throw ParamError("label span has start > end");
    if (i > 0 && sorted[i].start_frame <= sorted[i - 1].end_frame) {
      throw ParamError("overlapping label spans (" + std::to_string(sorted[i - 1].start_frame) + "-" +
                       std::to_string(sorted[i - 1].end_frame) + " and " + std::to_string(sorted[i].start_frame) +
                       "-" + std::to_string(sorted[i].end_frame) + ")");
    }
  }
  for (BlockFeatureRow& r : rows) r.label = label_for(r.frame_k, sorted);
}

std::vector<LabelSpan> read_labels_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t line_no = 0;
  std::vector<LabelSpan> spans;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line_no == 1) {
      if (line != "start_frame,end_frame,label") {
        throw DataError(path.string() + ": line 1: expected header start_frame,end_frame,label");
      }
      continue;
    }
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_commas(line);
    if (cells.size() != 3) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": expected 3 columns");
    }
    LabelSpan s;
    s.start_frame = static_cast<int>(parse_integer(cells[0], line_no));
    s.end_frame = static_cast<int>(parse_integer(cells[1], line_no));
    try {
      s.label = parse_motion_class(cells[2]);
    } catch (const DataError& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    spans.push_back(s);
  }
  if (line_no == 0) throw DataError(path.string() + ": empty labels file");
  return spans;
}

std::string feature_csv_header(const BlockGridParams& p) {
  std::string h;
  for (int r = 0; r < p.grid_n; ++r) {
    for (int c = 0; c < p.grid_n; ++c) {
      const std::string prefix = "b" + std::to_string(r) + "_" + std::to_string(c) + "_";
      if (p.mode == BlockMode::kDominant) {
        h += prefix + "dir," + prefix + "mag,";
      } else {
        for (int k = 0; k < kDirectionBins; ++k) h += prefix + "h" + std::to_string(k) + ",";
        h += prefix + "mag,";
      }
    }
  }
  return h + "label";
}

std::string feature_csv(const std::vector<BlockFeatureRow>& rows, const BlockGridParams& p) {
  const int per_block = p.values_per_block();
  std::string out = feature_csv_header(p) + "\n";
  for (const BlockFeatureRow& r : rows) {
    if (static_cast<int>(r.features.size()) != p.feature_count()) {
      throw ParamError("feature row width does not match the grid parameters");
    }
    for (std::size_t i = 0; i < r.features.size(); ++i) {
      const bool is_mag = static_cast<int>(i % static_cast<std::size_t>(per_block)) == per_block - 1;
      out += is_mag ? format_mag(r.features[i]) : std::to_string(std::lround(r.features[i]));
      out += ',';
    }
    out += r.label ? class_name(*r.label) : kUnlabeled;
    out += '\n';
  }
  return out;
}

void write_feature_csv(const std::vector<BlockFeatureRow>& rows, const BlockGridParams& p,
                       const std::filesystem::path& path) {
  const std::string text = feature_csv(rows, p);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << text;
}

FeatureTable parse_feature_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("line 1: missing header");
  line = strip_cr(line);
  const std::vector<std::string> head = split_commas(line);
  FeatureTable table;
  const std::size_t n_features = head.size() - 1;
  const bool histogram = head.size() >= 2 && head[0].size() > 3 && head[0].ends_with("_h0");
  table.params.mode = histogram ? BlockMode::kHistogram : BlockMode::kDominant;
  const std::size_t per_block = static_cast<std::size_t>(table.params.values_per_block());
  const auto grid = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_features / per_block))));
  table.params.grid_n = std::max(grid, 1);
  if (head.size() < 2 || n_features % per_block != 0 || feature_csv_header(table.params) != line) {
    throw DataError("line 1: malformed feature header");
  }

  std::size_t line_no = 1;
  int ordinal = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_commas(line);
    if (cells.size() != head.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(head.size()) +
                      " columns, found " + std::to_string(cells.size()));
    }
    BlockFeatureRow row;
    row.frame_k = ordinal++;
    row.features.reserve(n_features);
    for (std::size_t i = 0; i < n_features; ++i) row.features.push_back(parse_number(cells[i], line_no));
    if (cells.back() != kUnlabeled) {
      try {
        row.label = parse_motion_class(cells.back());
      } catch (const DataError& e) {
        throw DataError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  try {
    return parse_feature_csv(read_text(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace crowdflow
