#include <doctest.h>

#include <numeric>

#include "crowdflow/blockfeat.hpp"
#include "helpers.hpp"

using namespace crowdflow;

namespace {

MotionVector mv(double x, double y, double dx, double dy) { return MotionVector::from({x, y}, {dx, dy}); }

std::vector<MotionVector> random_vectors(Rng& rng, int n) {
  std::vector<MotionVector> vs;
  for (int i = 0; i < n; ++i) {
    vs.push_back(mv(rng.uniform(0, 224), rng.uniform(0, 224), rng.uniform(-9, 9), rng.uniform(-9, 9)));
  }
  return vs;
}

std::size_t count_columns(const std::string& line) { return std::count(line.begin(), line.end(), ',') + 1; }

}  // namespace

TEST_CASE("empty input gives empty blocks") {
  BlockGridParams p;
  const auto row = extract_block_features({}, p);
  REQUIRE(row.features.size() == 128);
  for (std::size_t i = 0; i < 128; i += 2) {
    CHECK(row.features[i] == -1.0);
    CHECK(row.features[i + 1] == 0.0);
  }
}

TEST_CASE("uniform field fills every block") {
  BlockGridParams p;
  std::vector<MotionVector> vs;
  for (int by = 0; by < 8; ++by)
    for (int bx = 0; bx < 8; ++bx) vs.push_back(mv(bx * 28 + 5, by * 28 + 5, 3.0 * std::cos(75 * M_PI / 180), -3.0 * std::sin(75 * M_PI / 180)));
  const auto row = extract_block_features(vs, p);
  for (std::size_t i = 0; i < 128; i += 2) {
    CHECK(row.features[i] == 2.0);
    CHECK(row.features[i + 1] == doctest::Approx(3.0));
  }
}

TEST_CASE("dominant bin and mean magnitude of one block") {
  BlockGridParams p;
  const auto row = extract_block_features({mv(1, 1, 2, 0), mv(2, 2, 4, 0), mv(3, 3, -6, 0)}, p);
  // bins {0, 0, 6}: dominant 0, mean magnitude (2 + 4 + 6) / 3.
  CHECK(row.features[0] == 0.0);
  CHECK(row.features[1] == doctest::Approx(4.0));
  const auto tie = extract_block_features({mv(1, 1, -2, 0), mv(2, 2, 2, 0)}, p);
  CHECK(tie.features[0] == 0.0);
}

TEST_CASE("feature lengths") {
  for (int n : {1, 2, 5, 8, 16}) {
    BlockGridParams p;
    p.grid_n = n;
    CHECK(extract_block_features({}, p).features.size() == static_cast<std::size_t>(2 * n * n));
    p.mode = BlockMode::kHistogram;
    CHECK(extract_block_features({}, p).features.size() == static_cast<std::size_t>(13 * n * n));
  }
}

TEST_CASE("histogram counts sum to the vector count and ignore order") {
  Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    BlockGridParams p;
    p.grid_n = 1 + static_cast<int>(rng.index(10));
    p.mode = BlockMode::kHistogram;
    auto vs = random_vectors(rng, static_cast<int>(rng.index(300)));
    const auto row = extract_block_features(vs, p);
    double total = 0;
    for (std::size_t b = 0; b < row.features.size(); b += 13)
      for (std::size_t k = 0; k < 12; ++k) total += row.features[b + k];
    CHECK(total == vs.size());

    rng.shuffle(vs);
    const auto again = extract_block_features(vs, p);
    for (std::size_t i = 0; i < row.features.size(); ++i) {
      CHECK(again.features[i] == doctest::Approx(row.features[i]).epsilon(1e-12));
    }
    p.mode = BlockMode::kDominant;
    const auto d1 = extract_block_features(vs, p);
    rng.shuffle(vs);
    const auto d2 = extract_block_features(vs, p);
    for (std::size_t i = 0; i < d1.features.size(); i += 2) CHECK(d1.features[i] == d2.features[i]);
  }
}

TEST_CASE("labels") {
  const std::vector<LabelSpan> spans = {{0, 100, MotionClass::kLane}};
  CHECK(label_for(50, spans) == MotionClass::kLane);
  CHECK_FALSE(label_for(200, spans).has_value());
  std::vector<BlockFeatureRow> rows(2);
  rows[0].frame_k = 0;
  rows[1].frame_k = 150;
  label_rows(rows, spans);
  CHECK(rows[0].label == MotionClass::kLane);
  CHECK_FALSE(rows[1].label.has_value());
  try {
    label_rows(rows, {{0, 10, MotionClass::kArc}, {5, 20, MotionClass::kLane}});
    FAIL("expected overlap error");
  } catch (const ParamError& e) {
    CHECK(std::string(e.what()).find("overlapping") != std::string::npos);
  }
  testing::TempDir dir("labels");
  testing::spit(dir / "l.csv", "start_frame,end_frame,label\n0,9,Arc\n10,19,RandomBlock\n");
  const auto read = read_labels_csv(dir / "l.csv");
  REQUIRE(read.size() == 2);
  CHECK(read[1].label == MotionClass::kRandomBlock);
  CHECK(read[1].end_frame == 19);
}

TEST_CASE("feature CSV layout and round trip") {
  Rng rng(4);
  BlockGridParams p;
  std::vector<BlockFeatureRow> rows;
  for (int i = 0; i < 6; ++i) {
    auto r = extract_block_features(random_vectors(rng, 100), p, i);
    if (i % 3) r.label = static_cast<MotionClass>(i % 4);
    rows.push_back(r);
  }
  const std::string csv = feature_csv(rows, p);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line.rfind("b0_0_dir,b0_0_mag,b0_1_dir", 0) == 0);
  CHECK(count_columns(line) == 129);
  int data = 0;
  while (std::getline(lines, line)) {
    CHECK(count_columns(line) == 129);
    ++data;
  }
  CHECK(data == 6);

  const FeatureTable t = parse_feature_csv(csv);
  CHECK(t.params.grid_n == 8);
  CHECK(t.params.mode == BlockMode::kDominant);
  REQUIRE(t.rows.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(t.rows[i].label == rows[i].label);
    for (std::size_t j = 0; j < rows[i].features.size(); ++j) {
      CHECK(t.rows[i].features[j] == doctest::Approx(rows[i].features[j]).epsilon(1e-6));
    }
  }
  CHECK(feature_csv(t.rows, t.params) == csv);

  p.mode = BlockMode::kHistogram;
  p.grid_n = 3;
  const std::string hist = feature_csv({extract_block_features(random_vectors(rng, 50), p)}, p);
  const FeatureTable h = parse_feature_csv(hist);
  CHECK(h.params.mode == BlockMode::kHistogram);
  CHECK(h.params.grid_n == 3);
  CHECK(feature_csv(h.rows, h.params) == hist);
}

TEST_CASE("malformed feature CSV names the line") {
  BlockGridParams p;
  std::vector<BlockFeatureRow> rows;
  for (int i = 0; i < 8; ++i) rows.push_back(extract_block_features({}, p, i));
  std::string csv = feature_csv(rows, p);
  // Drop the last cell of data line 6 (file line 7).
  std::vector<std::string> lines;
  std::istringstream in(csv);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  lines[6] = lines[6].substr(0, lines[6].rfind(','));
  std::string broken;
  for (const auto& l : lines) broken += l + "\n";
  try {
    parse_feature_csv(broken);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_feature_csv("a,b\n1,2\n"), DataError);
}
