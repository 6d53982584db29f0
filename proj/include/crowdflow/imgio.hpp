#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "crowdflow/error.hpp"
#include "crowdflow/grid.hpp"

namespace crowdflow {

inline constexpr int kWorkingSize = 224;

// One grayscale frame. pixels(y, x), 8-bit intensities.
struct Frame {
  int index = 0;
  GridU8 pixels;

  int width() const { return static_cast<int>(pixels.cols()); }
  int height() const { return static_cast<int>(pixels.rows()); }
};

using Rgb = std::array<std::uint8_t, 3>;

// Interleaved 8-bit RGB image.
struct RgbImage {
  int index = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 * width * height, row-major RGB

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(3) * w * h, 0) {}

  Rgb at(int x, int y) const {
    const std::size_t o = 3 * (static_cast<std::size_t>(y) * width + x);
    return {data[o], data[o + 1], data[o + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t o = 3 * (static_cast<std::size_t>(y) * width + x);
    data[o] = c[0];
    data[o + 1] = c[1];
    data[o + 2] = c[2];
  }
};

using SourceImage = std::variant<Frame, RgbImage>;

struct FrameSequence {
  std::filesystem::path source;
  int native_width = 0;
  int native_height = 0;
  std::vector<SourceImage> images;  // indices 0..n-1 in filename order
};

// Loads every .pgm/.ppm/.pnm/.png file of a directory in byte-wise filename
// order. Color files stay RGB until to_grayscale.
FrameSequence load_sequence(const std::filesystem::path& dir, std::optional<std::size_t> limit = {});

// BT.601 luma, rounded half up.
Frame to_grayscale(const RgbImage& rgb);

// Corner-aligned bilinear resize: source coordinate = dst * (src - 1) / (dst - 1).
template <typename Scalar>
Grid<Scalar> resize_bilinear(const Grid<Scalar>& src, int width, int height) {
  if (width < 2 || height < 2) throw ParamError("resize_bilinear: target dimensions must be >= 2");
  if (src.cols() == width && src.rows() == height) return src;
  Grid<Scalar> out(height, width);
  const double sx = src.cols() > 1 ? static_cast<double>(src.cols() - 1) / (width - 1) : 0.0;
  const double sy = src.rows() > 1 ? static_cast<double>(src.rows() - 1) / (height - 1) : 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double v = sample_bilinear(src, x * sx, y * sy);
      if constexpr (std::is_integral_v<Scalar>) {
        const double lo = static_cast<double>(std::numeric_limits<Scalar>::min());
        const double hi = static_cast<double>(std::numeric_limits<Scalar>::max());
        out(y, x) = static_cast<Scalar>(std::clamp(std::round(v), lo, hi));
      } else {
        out(y, x) = static_cast<Scalar>(v);
      }
    }
  }
  return out;
}

Frame resize_bilinear(const Frame& f, int width = kWorkingSize, int height = kWorkingSize);

// Grayscale conversion followed by resize, for every image of the sequence.
std::vector<Frame> prepare_frames(const FrameSequence& seq, int width = kWorkingSize,
                                  int height = kWorkingSize);

// Binary netpbm codecs (maxval 255).
Frame decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>");
RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>");
// 8-bit gray stays a Frame; any other PNG is converted to RGB (alpha dropped onto black).
SourceImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>");
std::vector<std::uint8_t> encode_pgm(const Frame& f);
std::vector<std::uint8_t> encode_ppm(const RgbImage& img);

SourceImage read_image(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Frame& f);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);

}  // namespace crowdflow
