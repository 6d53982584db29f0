#include <doctest.h>

#include <cmath>

#include "crowdflow/corners.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace crowdflow;

namespace {

Frame square_frame() {
  Frame f = testing::constant_frame(224, 224, 0);
  f.pixels.block(92, 92, 40, 40).setConstant(255);
  return f;
}

// Random texture confined to [50, 200] so offsets up to 50 never clip.
Frame midrange_frame(Rng& rng, int w, int h) {
  const GridD g = oracle::smooth_noise(rng, w, h, 1, 1);
  return testing::from_grid(50.0 + g * (150.0 / 255.0));
}

bool same_points(const std::vector<CornerPoint>& a, const std::vector<CornerPoint>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].x != b[i].x || a[i].y != b[i].y || a[i].score != b[i].score) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("min-eigenvalue map equals the eigensolver oracle") {
  Rng rng(21);
  for (int block : {1, 3, 5}) {
    const Frame f = oracle::random_frame(rng, 23, 19);
    const GridD got = min_eigenvalue_map(f, block);
    const GridD want = oracle::min_eigen(f, block);
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) CHECK(got(y, x) == doctest::Approx(want(y, x)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("detectors find nothing on constant images") {
  const Frame f = testing::constant_frame(64, 48, 123);
  CornerParams p;
  CHECK(detect_shi_tomasi(f, p).empty());
  CHECK(detect_fast(f, p).empty());
}

TEST_CASE("square yields its four corners") {
  CornerParams p;
  const auto pts = detect_shi_tomasi(square_frame(), p);
  REQUIRE(pts.size() == 4);
  const double cs[4][2] = {{92, 92}, {131, 92}, {92, 131}, {131, 131}};
  for (const auto& c : cs) {
    bool hit = false;
    for (const auto& q : pts) hit = hit || (std::abs(q.x - c[0]) <= 2 && std::abs(q.y - c[1]) <= 2);
    CHECK_MESSAGE(hit, "corner " << c[0] << "," << c[1]);
  }
}

TEST_CASE("max_corners 1 keeps the global maximum") {
  Rng rng(4);
  const Frame f = midrange_frame(rng, 80, 60);
  CornerParams p;
  p.max_corners = 1;
  const auto pts = detect_shi_tomasi(f, p);
  REQUIRE(pts.size() == 1);
  const GridD s = oracle::min_eigen(f, p.block_size);
  Eigen::Index my = 0, mx = 0;
  s.maxCoeff(&my, &mx);  // first maximum in storage (row-major) order
  CHECK(pts[0].x == mx);
  CHECK(pts[0].y == my);
}

TEST_CASE("Shi-Tomasi output respects min_distance and ordering") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Frame f = oracle::random_frame(rng, 60, 50);
    CornerParams p;
    p.min_distance = 1.0 + rng.uniform(0.0, 10.0);
    p.max_corners = 1 + static_cast<int>(rng.index(200));
    const auto pts = detect_shi_tomasi(f, p);
    CHECK(static_cast<int>(pts.size()) <= p.max_corners);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i > 0) CHECK(pts[i - 1].score >= pts[i].score);
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        CHECK(std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) >= p.min_distance);
      }
    }
  }
}

TEST_CASE("detections are unchanged by a constant intensity offset") {
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const Frame f = midrange_frame(rng, 64, 64);
    Frame g = f;
    const int c = static_cast<int>(rng.index(51));
    g.pixels = (f.pixels.cast<int>() + c).cast<std::uint8_t>();
    CornerParams p;
    p.fast_threshold = 5;
    CHECK(same_points(detect_shi_tomasi(f, p), detect_shi_tomasi(g, p)));
    CHECK(same_points(detect_fast(f, p), detect_fast(g, p)));
  }
}

TEST_CASE("FAST matches the exhaustive segment test") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const Frame f = oracle::random_frame(rng, 32 + static_cast<int>(rng.index(33)), 32 + static_cast<int>(rng.index(33)));
    CornerParams p;
    p.fast_threshold = 10 + static_cast<int>(rng.index(60));
    p.fast_arc = 9 + static_cast<int>(rng.index(4));
    CHECK(same_points(detect_fast(f, p), oracle::fast_detect(f, p.fast_threshold, p.fast_arc)));
  }
}

TEST_CASE("FAST finds the vertex of an L-shaped step") {
  Frame f = testing::constant_frame(48, 48, 50);
  f.pixels.block(20, 20, 28, 28).setConstant(150);
  CornerParams p;
  const auto pts = detect_fast(f, p);
  REQUIRE_FALSE(pts.empty());
  bool hit = false;
  for (const auto& q : pts) hit = hit || (std::abs(q.x - 20) <= 1 && std::abs(q.y - 20) <= 1);
  CHECK(hit);
  CHECK(same_points(pts, oracle::fast_detect(f, p.fast_threshold, p.fast_arc)));
}

TEST_CASE("FAST threshold 255 finds nothing") {
  Rng rng(1);
  CornerParams p;
  p.fast_threshold = 255;
  CHECK(detect_fast(oracle::random_frame(rng, 40, 40), p).empty());
}

TEST_CASE("detector names") {
  CHECK(parse_detector("shi-tomasi") == Detector::kShiTomasi);
  CHECK(parse_detector("fast") == Detector::kFast);
  CHECK_THROWS_AS(parse_detector("harris"), ParamError);
  CornerParams p;
  p.block_size = 4;
  CHECK_THROWS_AS(p.validate(), ParamError);
}
