#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fpid/core/image.hpp"
#include "fpid/core/orientation.hpp"

namespace fpid::core {

enum class MinutiaKind { Ending, Bifurcation };

std::string_view to_string(MinutiaKind k);
MinutiaKind minutia_kind_from_string(std::string_view s);

struct Minutia {
  int x = 0;
  int y = 0;
  double direction = 0.0;  // radians, [0, 2pi)
  MinutiaKind kind = MinutiaKind::Ending;

  friend bool operator==(const Minutia&, const Minutia&) = default;
};

/// Extracted features of one fingerprint.
struct MinutiaeTemplate {
  std::vector<Minutia> minutiae;
  int width = 0;
  int height = 0;

  std::size_t size() const { return minutiae.size(); }
  bool empty() const { return minutiae.empty(); }

  /// Throws FormatError if any minutia is out of bounds or has an
  /// unnormalized direction.
  void validate() const;

  friend bool operator==(const MinutiaeTemplate&, const MinutiaeTemplate&) = default;
};

struct ExtractionParams {
  double target_mean = 100.0;
  double target_var = 100.0;
  int block_size = 16;
  double segmentation_threshold = 100.0;
  double merge_radius = 8.0;
  int border_margin = 10;
  int trace_steps = 5;
};

/// Intermediate images of the extraction pipeline, kept for inspection.
struct ExtractionTrace {
  GrayImage normalized;
  OrientationField field;
  GrayImage binary;
  GrayImage skeleton;
};

MinutiaeTemplate extract_minutiae(const GrayImage& img, const ExtractionParams& params = {},
                                  ExtractionTrace* trace = nullptr);

}  // namespace fpid::core
