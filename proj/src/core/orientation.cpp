#include "fpid/core/orientation.hpp"

#include <algorithm>
#include <cmath>

#include "fpid/core/angles.hpp"
#include "fpid/core/error.hpp"

namespace fpid::core {

OrientationField::OrientationField(int image_width, int image_height, int block_size)
    : block_size_(block_size),
      image_width_(image_width),
      image_height_(image_height),
      rows_((image_height + block_size - 1) / block_size),
      cols_((image_width + block_size - 1) / block_size),
      angles_(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_), 0.0),
      mask_(angles_.size(), 0) {}

std::size_t OrientationField::foreground_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

OrientationField estimate_orientation(const GrayImage& img, int block_size,
                                      double variance_threshold) {
  if (block_size < 4) throw PreconditionError("blockSize must be >= 4");
  OrientationField field(img.width(), img.height(), block_size);
  const int w = img.width();
  const int h = img.height();

  auto px = [&](int x, int y) {
    return static_cast<double>(img.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)));
  };

  for (int r = 0; r < field.rows(); ++r) {
    for (int c = 0; c < field.cols(); ++c) {
      const int x0 = c * block_size;
      const int y0 = r * block_size;
      const int x1 = std::min(x0 + block_size, w);
      const int y1 = std::min(y0 + block_size, h);

      double gxy = 0.0, gxx_minus_gyy = 0.0, energy = 0.0;
      double sum = 0.0, sum_sq = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const double gx = 0.5 * (px(x + 1, y) - px(x - 1, y));
          const double gy = 0.5 * (px(x, y + 1) - px(x, y - 1));
          gxy += gx * gy;
          gxx_minus_gyy += gx * gx - gy * gy;
          energy += gx * gx + gy * gy;
          const double v = img.at(x, y);
          sum += v;
          sum_sq += v * v;
        }
      }
      const double n = static_cast<double>((x1 - x0) * (y1 - y0));
      const double mean = sum / n;
      const double var = sum_sq / n - mean * mean;

      if (energy == 0.0) {
        field.set(r, c, 0.0, false);
        continue;
      }
      const double theta = wrap_pi(0.5 * std::atan2(2.0 * gxy, gxx_minus_gyy) + kPi / 2.0);
      field.set(r, c, theta, var >= variance_threshold);
    }
  }
  return field;
}

GrayImage binarize(const GrayImage& img, const OrientationField& field) {
  if (field.image_width() != img.width() || field.image_height() != img.height()) {
    throw PreconditionError("orientation field was built for a different image size");
  }
  const int bs = field.block_size();
  GrayImage out(img.width(), img.height(), 255);
  for (int r = 0; r < field.rows(); ++r) {
    for (int c = 0; c < field.cols(); ++c) {
      if (!field.foreground(r, c)) continue;
      const int x0 = c * bs, y0 = r * bs;
      const int x1 = std::min(x0 + bs, img.width());
      const int y1 = std::min(y0 + bs, img.height());
      double sum = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) sum += img.at(x, y);
      const double mean = sum / static_cast<double>((x1 - x0) * (y1 - y0));
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) out.at(x, y) = img.at(x, y) < mean ? 0 : 255;
    }
  }
  return out;
}

}  // namespace fpid::core
