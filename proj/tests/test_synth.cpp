#include <doctest.h>

#include <cmath>
#include <set>

#include "crowdflow/pipeline.hpp"
#include "crowdflow/synth.hpp"
#include "helpers.hpp"

using namespace crowdflow;

TEST_CASE("noise-free Lane vectors share one bin") {
  SyntheticCase c;
  c.motion_class = MotionClass::kLane;
  c.noise_sigma = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    c.seed = seed;
    std::set<int> bins;
    for (const auto& v : gen_synthetic_field(c)) bins.insert(v.bin);
    CHECK(bins.size() == 1);
  }
}

TEST_CASE("Arc displacement is perpendicular to the radius") {
  SyntheticField f;
  f.motion_class = MotionClass::kArc;
  f.center = {112, 112};
  f.speed = 0.06;
  for (double sign : {1.0, -1.0}) {
    f.sign = sign;
    const Eigen::Vector2d d = f.displacement({162, 112});
    CHECK(std::abs(d.x()) < 1e-12);
    const int b = direction_bin(d.x(), d.y());
    CHECK(b == (sign > 0 ? 3 : 9));
  }
}

TEST_CASE("ConvergeDiverge is radial") {
  SyntheticField f;
  f.motion_class = MotionClass::kConvergeDiverge;
  f.center = {100, 120};
  f.speed = 400;
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d p(rng.uniform(0, 224), rng.uniform(0, 224));
    f.sign = rng.uniform() < 0.5 ? -1 : 1;
    const Eigen::Vector2d d = f.displacement(p), r = p - f.center;
    CHECK(std::abs(d.x() * r.y() - d.y() * r.x()) < 1e-9 * r.norm() * d.norm() + 1e-12);
    CHECK(d.dot(r) * f.sign > 0);
  }
}

TEST_CASE("synthetic fields are seeded and well formed") {
  for (int cls = 0; cls < kMotionClassCount; ++cls) {
    SyntheticCase c;
    c.motion_class = static_cast<MotionClass>(cls);
    c.n_vectors = 300;
    const auto a = gen_synthetic_field(c);
    const auto b = gen_synthetic_field(c);
    REQUIRE(a.size() == 300);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].delta == b[i].delta);
      CHECK(a[i].start == b[i].start);
      CHECK(a[i].bin >= 0);
      CHECK(a[i].start.x() >= 0);
      CHECK(a[i].start.x() <= 223);
    }
  }
  SyntheticCase bad;
  bad.n_vectors = 0;
  CHECK_THROWS_AS(gen_synthetic_field(bad), ParamError);
  bad.n_vectors = 1;
  bad.noise_sigma = -1;
  CHECK_THROWS_AS(gen_synthetic_field(bad), ParamError);
}

TEST_CASE("synthetic rows are balanced and labeled") {
  SynthOptions o;
  o.per_class = 7;
  const auto rows = synth_feature_rows(o);
  REQUIRE(rows.size() == 28);
  int counts[kMotionClassCount] = {};
  for (const auto& r : rows) {
    REQUIRE(r.label.has_value());
    ++counts[static_cast<int>(*r.label)];
    CHECK(r.features.size() == 128);
  }
  for (int c : counts) CHECK(c == 7);
}

TEST_CASE("keyframe pairs") {
  const auto p = keyframe_pairs(11, 5);
  REQUIRE(p.size() == 2);
  CHECK(p[0] == std::pair{0, 5});
  CHECK(p[1] == std::pair{5, 10});
  CHECK(keyframe_pairs(6, 5).size() == 1);
  CHECK_THROWS_AS(keyframe_pairs(5, 5), DataError);
}

TEST_CASE("MII sequence: static footage is black, moving footage is not") {
  PipelineParams p;
  std::vector<Frame> still;
  SyntheticCase c;
  c.motion_class = MotionClass::kLane;
  const auto moving = render_synthetic_sequence(c, 6, 5);
  for (int i = 0; i < 11; ++i) {
    Frame f = moving.front();
    f.index = i;
    still.push_back(f);
  }
  const auto quiet = render_mii_sequence(still, p);
  REQUIRE(quiet.size() == 2);
  for (const auto& m : quiet) CHECK(std::all_of(m.image.data.begin(), m.image.data.end(), [](auto v) { return v == 0; }));

  const auto lit = render_mii_sequence(moving, p);
  REQUIRE(lit.size() == 1);
  CHECK(lit[0].frame_k == 0);
  CHECK(std::any_of(lit[0].image.data.begin(), lit[0].image.data.end(), [](auto v) { return v != 0; }));

  CHECK_THROWS_AS(render_mii_sequence({still[0], still[1]}, p), DataError);
}

TEST_CASE("pixel-level Lane sequence recovers the lane direction") {
  SyntheticCase c;
  c.motion_class = MotionClass::kLane;
  c.seed = 5;
  Rng rng(c.seed);
  const SyntheticField field = draw_field(c, rng);
  const int want = direction_bin(field.displacement({0, 0}).x(), field.displacement({0, 0}).y());
  const auto frames = render_synthetic_sequence(c, 6, 5);
  const auto vs = motion_between(frames[0], frames[5], PipelineParams{});
  REQUIRE(vs.size() > 20);
  int agree = 0;
  for (const auto& v : vs) agree += v.bin == want;
  CHECK(agree >= 0.8 * vs.size());
}
