#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "crowdflow/corners.hpp"
#include "crowdflow/error.hpp"
#include "crowdflow/optflow.hpp"
#include "crowdflow/random.hpp"

namespace crowdflow {
namespace {

constexpr int kBenchSize = 224;

// Smooth analytic texture: a sum of seeded plane waves.
struct Texture {
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;

  explicit Texture(Rng& rng) {
    for (int k = 0; k < 14; ++k) {
      const double wavelength = rng.uniform(7.0, 36.0);
      const double theta = rng.uniform(0.0, 2.0 * M_PI);
      const double f = 2.0 * M_PI / wavelength;
      waves.push_back({f * std::cos(theta), f * std::sin(theta), rng.uniform(0.0, 2.0 * M_PI), rng.uniform(5.0, 12.0)});
    }
  }

  double operator()(double x, double y) const {
    double v = 128.0;
    for (const Wave& w : waves) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
    return v;
  }
};

Frame render(const std::function<double(double, double)>& intensity) {
  Frame f;
  f.pixels.resize(kBenchSize, kBenchSize);
  for (int y = 0; y < kBenchSize; ++y) {
    for (int x = 0; x < kBenchSize; ++x) {
      f.pixels(y, x) = static_cast<std::uint8_t>(std::clamp(std::round(intensity(x, y)), 0.0, 255.0));
    }
  }
  return f;
}

// Forward displacement field and its inverse warp.
struct Motion {
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> displacement;
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> inverse;
};

Motion make_motion(FlowCase c, Rng& rng) {
  const Eigen::Vector2d center(0.5 * (kBenchSize - 1), 0.5 * (kBenchSize - 1));
  switch (c) {
    case FlowCase::kStatic:
      return {[](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero().eval(); },
              [](const Eigen::Vector2d& q) { return q; }};
    case FlowCase::kTranslation: {
      const double mag = rng.uniform(1.5, 5.0);
      const double ang = rng.uniform(0.0, 2.0 * M_PI);
      const Eigen::Vector2d t(mag * std::cos(ang), mag * std::sin(ang));
      return {[t](const Eigen::Vector2d&) { return t; }, [t](const Eigen::Vector2d& q) { return (q - t).eval(); }};
    }
    case FlowCase::kRotation: {
      const double deg = rng.uniform(1.0, 3.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      const Eigen::Rotation2Dd rot(deg * M_PI / 180.0);
      return {[rot, center](const Eigen::Vector2d& p) { return (center + rot * (p - center) - p).eval(); },
              [rot, center](const Eigen::Vector2d& q) { return (center + rot.inverse() * (q - center)).eval(); }};
    }
    case FlowCase::kDiverging: {
      const double s = 1.0 + rng.uniform(0.01, 0.03) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      return {[s, center](const Eigen::Vector2d& p) { return ((s - 1.0) * (p - center)).eval(); },
              [s, center](const Eigen::Vector2d& q) { return (center + (q - center) / s).eval(); }};
    }
  }
  throw ParamError("unknown flow case");
}

}  // namespace

FlowCase parse_flow_case(const std::string& name) {
  if (name == "static") return FlowCase::kStatic;
  if (name == "translation") return FlowCase::kTranslation;
  if (name == "rotation") return FlowCase::kRotation;
  if (name == "diverging") return FlowCase::kDiverging;
  throw ParamError("unknown flow case '" + name + "'");
}

std::string flow_case_name(FlowCase c) {
  switch (c) {
    case FlowCase::kStatic:
      return "static";
    case FlowCase::kTranslation:
      return "translation";
    case FlowCase::kRotation:
      return "rotation";
    case FlowCase::kDiverging:
      return "diverging";
  }
  return "?";
}

std::string FlowBenchReport::csv_line() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%llu,%.6f,%.6f,%.3f", method.c_str(), flow_case.c_str(),
                static_cast<unsigned long long>(seed), accuracy, mean_epe_px, runtime_ms);
  return buf;
}

FlowBenchReport bench_flow(const std::string& method_name, FlowCase flow_case, std::uint64_t seed) {
  const FlowMethod method = parse_flow_method(method_name);
  Rng rng(seed);
  const Texture texture(rng);
  const Motion motion = make_motion(flow_case, rng);
  const Frame prev = render([&](double x, double y) { return texture(x, y); });
  const Frame next = render([&](double x, double y) {
    const Eigen::Vector2d src = motion.inverse(Eigen::Vector2d(x, y));
    return texture(src.x(), src.y());
  });

  FlowBenchReport report;
  report.method = flow_method_name(method);
  report.flow_case = flow_case_name(flow_case);
  report.seed = seed;

  const LkParams lk;
  const DenseParams dense;
  std::size_t good = 0;
  std::size_t tracked = 0;
  double epe_sum = 0.0;
  const auto t0 = std::chrono::steady_clock::now();

  if (method == FlowMethod::kLucasKanade) {
    const int margin = lk.half_window() + 1;
    std::vector<Eigen::Vector2d> pts;
    for (const CornerPoint& c : detect_shi_tomasi(prev, CornerParams{})) {
      if (c.x >= margin && c.y >= margin && c.x <= kBenchSize - 1 - margin && c.y <= kBenchSize - 1 - margin) {
        pts.emplace_back(c.x, c.y);
      }
    }
    const std::vector<TrackedPoint> res = lk_track(prev, next, pts, lk);
    report.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (const TrackedPoint& tp : res) {
      ++report.evaluated;
      if (!tp.tracked()) continue;
      const double epe = (tp.end - tp.start - motion.displacement(tp.start)).norm();
      ++tracked;
      epe_sum += epe;
      if (epe < 1.0) ++good;
    }
  } else {
    DenseFlow flow;
    if (method == FlowMethod::kHornSchunck) {
      flow = horn_schunck(prev, next, dense.hs_alpha, dense.hs_iters);
    } else if (method == FlowMethod::kBlockMatch) {
      flow = block_match(prev, next, dense.bm_block, dense.bm_radius);
    } else {
      flow = DenseFlow{GridD::Zero(kBenchSize, kBenchSize), GridD::Zero(kBenchSize, kBenchSize)};
    }
    report.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const int margin = std::max(16, dense.bm_block + dense.bm_radius);
    for (int y = margin; y < kBenchSize - margin; ++y) {
      for (int x = margin; x < kBenchSize - margin; ++x) {
        const Eigen::Vector2d p(x, y);
        const double epe = (Eigen::Vector2d(flow.u(y, x), flow.v(y, x)) - motion.displacement(p)).norm();
        ++report.evaluated;
        ++tracked;
        epe_sum += epe;
        if (epe < 1.0) ++good;
      }
    }
  }
  report.accuracy = report.evaluated ? static_cast<double>(good) / report.evaluated : 0.0;
  report.mean_epe_px = tracked ? epe_sum / tracked : 0.0;
  return report;
}

}  // namespace crowdflow
