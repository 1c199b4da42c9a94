#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fpid::core {

/// 8-bit grayscale raster stored row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 255);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct ImageStats {
  double mean = 0.0;
  double variance = 0.0;
};

ImageStats image_stats(const GrayImage& img);

/// Global mean/variance normalization. A zero-variance input yields a
/// constant image at targetMean.
GrayImage normalize_image(const GrayImage& img, double target_mean = 100.0,
                          double target_var = 100.0);

// Binary PGM (P5, maxval <= 255). Throws FormatError on malformed input.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
GrayImage decode_pgm(const std::string& bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

}  // namespace fpid::core
