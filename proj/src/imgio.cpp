#include "crowdflow/imgio.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

#include <png.h>

#include "crowdflow/error.hpp"

namespace crowdflow {
namespace {

namespace fs = std::filesystem;

struct NetpbmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  std::size_t data_offset = 0;
};

NetpbmHeader parse_netpbm_header(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  NetpbmHeader h;
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space_and_comments();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw DataError(name + ": malformed netpbm header");
    }
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000) throw DataError(name + ": netpbm dimension out of range");
      ++pos;
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P') throw DataError(name + ": not a netpbm file");
  h.magic = std::string{static_cast<char>(bytes[0]), static_cast<char>(bytes[1])};
  pos = 2;
  h.width = static_cast<int>(read_int());
  h.height = static_cast<int>(read_int());
  const long maxval = read_int();
  if (h.width <= 0 || h.height <= 0) throw DataError(name + ": zero image dimension");
  if (maxval != 255) throw DataError(name + ": only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw DataError(name + ": malformed netpbm header");
  }
  h.data_offset = pos + 1;
  return h;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(path.string() + ": write failed");
}

bool is_frame_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png";
}

std::pair<int, int> dims_of(const SourceImage& img) {
  return std::visit(
      [](const auto& i) -> std::pair<int, int> {
        if constexpr (std::is_same_v<std::decay_t<decltype(i)>, Frame>) {
          return {i.width(), i.height()};
        } else {
          return {i.width, i.height};
        }
      },
      img);
}

}  // namespace

Frame decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  const NetpbmHeader h = parse_netpbm_header(bytes, name);
  if (h.magic != "P5") throw DataError(name + ": expected binary PGM (P5)");
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset < n) throw DataError(name + ": truncated pixel data");
  Frame f;
  f.pixels.resize(h.height, h.width);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset), n, f.pixels.data());
  return f;
}

RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  const NetpbmHeader h = parse_netpbm_header(bytes, name);
  if (h.magic != "P6") throw DataError(name + ": expected binary PPM (P6)");
  RgbImage img(h.width, h.height);
  if (bytes.size() - h.data_offset < img.data.size()) throw DataError(name + ": truncated pixel data");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset), img.data.size(), img.data.begin());
  return img;
}

std::vector<std::uint8_t> encode_pgm(const Frame& f) {
  const std::string header = "P5\n" + std::to_string(f.width()) + " " + std::to_string(f.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), f.pixels.data(), f.pixels.data() + f.pixels.size());
  return out;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  return out;
}

SourceImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DataError(name + ": corrupt PNG (" + image.message + ")");
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError(name + ": corrupt PNG (" + image.message + ")");
  }
  if (gray) {
    Frame f;
    f.pixels = Eigen::Map<const GridU8>(pixels.data(), h, w);
    return f;
  }
  RgbImage rgb(w, h);
  rgb.data = std::move(pixels);
  return rgb;
}

SourceImage read_image(const fs::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  const std::string name = path.filename().string();
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G') {
    return decode_png(bytes, name);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes, name);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, name);
  throw DataError(name + ": unrecognized image format");
}

void write_pgm(const fs::path& path, const Frame& f) { write_file(path, encode_pgm(f)); }

void write_ppm(const fs::path& path, const RgbImage& img) { write_file(path, encode_ppm(img)); }

FrameSequence load_sequence(const fs::path& dir, std::optional<std::size_t> limit) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + ": frames directory does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_frame_file(entry.path())) files.push_back(entry.path());
  }
  // Byte-wise lexicographic order on the filename.
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  if (limit && files.size() > *limit) files.resize(*limit);
  if (files.size() < 2) throw DataError(dir.string() + ": fewer than 2 frames");

  FrameSequence seq;
  seq.source = dir;
  seq.images.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    SourceImage img = read_image(files[i]);
    std::visit([i](auto& im) { im.index = static_cast<int>(i); }, img);
    seq.images.push_back(std::move(img));
  }
  std::tie(seq.native_width, seq.native_height) = dims_of(seq.images.front());
  for (std::size_t i = 1; i < files.size(); ++i) {
    if (dims_of(seq.images[i]) != std::pair{seq.native_width, seq.native_height}) {
      throw DataError(files[i].string() + ": frame size differs from " + files.front().filename().string());
    }
  }
  return seq;
}

Frame to_grayscale(const RgbImage& rgb) {
  Frame f;
  f.index = rgb.index;
  f.pixels.resize(rgb.height, rgb.width);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      const Rgb c = rgb.at(x, y);
      // Integer weights keep the rounding exact.
      const int luma = (299 * c[0] + 587 * c[1] + 114 * c[2] + 500) / 1000;
      f.pixels(y, x) = static_cast<std::uint8_t>(std::min(luma, 255));
    }
  }
  return f;
}

Frame resize_bilinear(const Frame& f, int width, int height) {
  Frame out;
  out.index = f.index;
  out.pixels = resize_bilinear(f.pixels, width, height);
  return out;
}

std::vector<Frame> prepare_frames(const FrameSequence& seq, int width, int height) {
  std::vector<Frame> frames;
  frames.reserve(seq.images.size());
  for (const SourceImage& img : seq.images) {
    Frame gray = std::holds_alternative<Frame>(img) ? std::get<Frame>(img) : to_grayscale(std::get<RgbImage>(img));
    frames.push_back(resize_bilinear(gray, width, height));
  }
  return frames;
}

}  // namespace crowdflow
