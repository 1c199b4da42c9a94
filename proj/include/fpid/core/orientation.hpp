#pragma once

#include <cstdint>
#include <vector>

#include "fpid/core/image.hpp"

namespace fpid::core {

/// Block-wise ridge orientation with a foreground mask.
///
/// Angles are measured in image coordinates (x right, y down) from the +x
/// axis towards +y and lie in [0, pi). An angle is only meaningful where the
/// block is foreground.
class OrientationField {
 public:
  OrientationField() = default;
  OrientationField(int image_width, int image_height, int block_size);

  int block_size() const { return block_size_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int image_width() const { return image_width_; }
  int image_height() const { return image_height_; }

  double angle(int row, int col) const { return angles_[idx(row, col)]; }
  bool foreground(int row, int col) const { return mask_[idx(row, col)] != 0; }
  void set(int row, int col, double angle, bool fg) {
    angles_[idx(row, col)] = angle;
    mask_[idx(row, col)] = fg ? 1 : 0;
  }

  // Pixel lookups; (x, y) must be inside the source image.
  double angle_at(int x, int y) const { return angle(y / block_size_, x / block_size_); }
  bool foreground_at(int x, int y) const { return foreground(y / block_size_, x / block_size_); }

  std::size_t foreground_count() const;

 private:
  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int block_size_ = 16;
  int image_width_ = 0;
  int image_height_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> angles_;
  std::vector<std::uint8_t> mask_;
};

/// Least-squares block orientation from central-difference gradients.
/// Blocks whose pixel variance is below `variance_threshold`, or which have
/// no gradient energy, are background.
OrientationField estimate_orientation(const GrayImage& img, int block_size = 16,
                                      double variance_threshold = 100.0);

/// Block-mean thresholding: ridge (darker than block mean) -> 0, else 255.
/// Background blocks become 255.
GrayImage binarize(const GrayImage& img, const OrientationField& field);

}  // namespace fpid::core
