#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "crowdflow/imgio.hpp"
#include "crowdflow/random.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("crowdflow_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

inline crowdflow::Frame constant_frame(int w, int h, std::uint8_t v) {
  crowdflow::Frame f;
  f.pixels = crowdflow::GridU8::Constant(h, w, v);
  return f;
}

inline crowdflow::Frame from_grid(const crowdflow::GridD& g) {
  crowdflow::Frame f;
  f.pixels = g.round().max(0.0).min(255.0).cast<std::uint8_t>();
  return f;
}

// Sets CROWDFLOW_THREADS for the lifetime of the object.
class ThreadsEnv {
 public:
  explicit ThreadsEnv(int n) {
    if (const char* v = std::getenv("CROWDFLOW_THREADS")) saved_ = v, had_ = true;
    setenv("CROWDFLOW_THREADS", std::to_string(n).c_str(), 1);
  }
  ~ThreadsEnv() {
    if (had_) {
      setenv("CROWDFLOW_THREADS", saved_.c_str(), 1);
    } else {
      unsetenv("CROWDFLOW_THREADS");
    }
  }

 private:
  std::string saved_;
  bool had_ = false;
};

}  // namespace testing
