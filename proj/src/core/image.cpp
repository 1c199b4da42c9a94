#include "fpid/core/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string_view>

#include "fpid/core/error.hpp"

namespace fpid::core {

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw PreconditionError("image dimensions must be >= 1");
  }
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) {
    throw PreconditionError("image dimensions must be >= 1");
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw PreconditionError("pixel buffer size does not match width x height");
  }
}

ImageStats image_stats(const GrayImage& img) {
  ImageStats s;
  auto px = img.pixels();
  if (px.empty()) return s;
  double sum = 0.0;
  for (auto v : px) sum += v;
  s.mean = sum / static_cast<double>(px.size());
  double acc = 0.0;
  for (auto v : px) {
    double d = v - s.mean;
    acc += d * d;
  }
  s.variance = acc / static_cast<double>(px.size());
  return s;
}

GrayImage normalize_image(const GrayImage& img, double target_mean, double target_var) {
  if (target_var <= 0.0) throw PreconditionError("targetVar must be > 0");
  const ImageStats s = image_stats(img);
  auto to_byte = [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  };
  GrayImage out(img.width(), img.height(), to_byte(target_mean));
  if (s.variance == 0.0) return out;

  const double scale = std::sqrt(target_var / s.variance);
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = to_byte(target_mean + scale * (src[i] - s.mean));
  }
  return out;
}

namespace {

class HeaderCursor {
 public:
  explicit HeaderCursor(std::span<const std::uint8_t> b) : bytes_(b) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = static_cast<char>(bytes_[pos_]);
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(std::string_view what) {
    skip_space_and_comments();
    long v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) throw FormatError("PGM " + std::string(what) + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw FormatError("PGM header: expected " + std::string(what));
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("not a binary PGM (missing P5 magic)");
  }
  HeaderCursor cur(bytes);
  cur.advance(2);
  const long w = cur.read_uint("width");
  const long h = cur.read_uint("height");
  const long maxval = cur.read_uint("maxval");
  if (w < 1 || h < 1) throw FormatError("PGM dimensions must be >= 1");
  if (maxval < 1 || maxval > 255) throw FormatError("PGM maxval must be in [1,255]");
  if (cur.pos() >= bytes.size() || !std::isspace(bytes[cur.pos()])) {
    throw FormatError("PGM header not terminated by whitespace");
  }
  cur.advance(1);
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - cur.pos() < n) throw FormatError("PGM raster truncated");
  std::vector<std::uint8_t> px(bytes.begin() + static_cast<std::ptrdiff_t>(cur.pos()),
                               bytes.begin() + static_cast<std::ptrdiff_t>(cur.pos() + n));
  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

GrayImage decode_pgm(const std::string& bytes) {
  return decode_pgm(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pgm(bytes);
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  const auto bytes = encode_pgm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace fpid::core
