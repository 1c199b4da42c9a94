#include "fpid/core/minutiae.hpp"

#include <algorithm>
#include <cmath>

#include "fpid/core/angles.hpp"
#include "fpid/core/error.hpp"
#include "fpid/core/thinning.hpp"

namespace fpid::core {

std::string_view to_string(MinutiaKind k) {
  return k == MinutiaKind::Ending ? "ending" : "bifurcation";
}

MinutiaKind minutia_kind_from_string(std::string_view s) {
  if (s == "ending") return MinutiaKind::Ending;
  if (s == "bifurcation") return MinutiaKind::Bifurcation;
  throw FormatError("unknown minutia kind '" + std::string(s) + "'");
}

void MinutiaeTemplate::validate() const {
  if (!minutiae.empty() && (width < 1 || height < 1)) {
    throw FormatError("template with minutiae must have positive dimensions");
  }
  for (std::size_t i = 0; i < minutiae.size(); ++i) {
    const auto& m = minutiae[i];
    if (m.x < 0 || m.y < 0 || m.x >= width || m.y >= height) {
      throw FormatError("minutia " + std::to_string(i) + " lies outside the image");
    }
    if (!(m.direction >= 0.0 && m.direction < kTwoPi)) {
      throw FormatError("minutia " + std::to_string(i) + " direction not in [0, 2pi)");
    }
  }
}

namespace {

bool is_ridge(const GrayImage& skel, int x, int y) {
  return skel.contains(x, y) && skel.at(x, y) == kRidge;
}

constexpr int kDx[8] = {0, 1, 0, -1, 1, 1, -1, -1};
constexpr int kDy[8] = {-1, 0, 1, 0, -1, 1, 1, -1};

// Sum of the displacement vectors obtained by walking up to `steps` pixels
// along every skeleton branch leaving (x, y).
std::pair<double, double> branch_sum(const GrayImage& skel, int x, int y, int steps) {
  std::vector<std::pair<int, int>> starts;
  for (int k = 0; k < 8; ++k)
    if (is_ridge(skel, x + kDx[k], y + kDy[k])) starts.emplace_back(x + kDx[k], y + kDy[k]);

  double sx = 0.0, sy = 0.0;
  for (auto [bx, by] : starts) {
    // Other branches' first pixels are off limits so walks stay on their own branch.
    std::vector<std::pair<int, int>> visited(starts.begin(), starts.end());
    visited.emplace_back(x, y);
    int px = bx, py = by;
    for (int s = 1; s < steps; ++s) {
      bool moved = false;
      for (int k = 0; k < 8; ++k) {
        const int nx = px + kDx[k], ny = py + kDy[k];
        if (!is_ridge(skel, nx, ny)) continue;
        if (std::find(visited.begin(), visited.end(), std::pair{nx, ny}) != visited.end()) continue;
        px = nx;
        py = ny;
        visited.emplace_back(nx, ny);
        moved = true;
        break;
      }
      if (!moved) break;
    }
    sx += px - x;
    sy += py - y;
  }
  return {sx, sy};
}

bool near_background(const OrientationField& field, int x, int y, int margin) {
  const int w = field.image_width(), h = field.image_height();
  if (x < margin || y < margin || x >= w - margin || y >= h - margin) return true;
  const int bs = field.block_size();
  for (int r = (y - margin) / bs; r <= (y + margin) / bs; ++r)
    for (int c = (x - margin) / bs; c <= (x + margin) / bs; ++c)
      if (!field.foreground(r, c)) return true;
  return false;
}

}  // namespace

MinutiaeTemplate extract_minutiae(const GrayImage& img, const ExtractionParams& params,
                                  ExtractionTrace* trace) {
  MinutiaeTemplate out;
  out.width = img.width();
  out.height = img.height();

  GrayImage normalized = normalize_image(img, params.target_mean, params.target_var);
  // Segmentation uses the raw contrast; normalization is affine so the
  // angles agree with those of the normalized image.
  OrientationField field = estimate_orientation(img, params.block_size, params.segmentation_threshold);
  GrayImage binary = binarize(normalized, field);
  GrayImage skeleton = thin(binary);

  std::vector<Minutia> kept;
  const double merge_sq = params.merge_radius * params.merge_radius;
  for (int y = 1; y < img.height() - 1; ++y) {
    for (int x = 1; x < img.width() - 1; ++x) {
      if (skeleton.at(x, y) != kRidge) continue;
      const int cn = crossing_number(skeleton, x, y);
      if (cn != 1 && cn != 3) continue;
      if (near_background(field, x, y, params.border_margin)) continue;

      const bool merged = std::any_of(kept.begin(), kept.end(), [&](const Minutia& m) {
        const double dx = m.x - x, dy = m.y - y;
        return dx * dx + dy * dy < merge_sq;
      });
      if (merged) continue;

      Minutia m;
      m.x = x;
      m.y = y;
      m.kind = cn == 1 ? MinutiaKind::Ending : MinutiaKind::Bifurcation;
      // Both kinds point away from the bulk of their branches: an ending
      // towards its open end, a bifurcation towards its stem. An ending and
      // the bifurcation it turns into when ridges and valleys swap then
      // share a direction.
      const double theta = field.angle_at(x, y);
      const auto [bx, by] = branch_sum(skeleton, x, y, params.trace_steps);
      const bool flip = std::cos(theta) * bx + std::sin(theta) * by > 0.0;
      m.direction = wrap_two_pi(flip ? theta + kPi : theta);
      kept.push_back(m);
    }
  }
  out.minutiae = std::move(kept);

  if (trace != nullptr) {
    trace->normalized = std::move(normalized);
    trace->field = std::move(field);
    trace->binary = std::move(binary);
    trace->skeleton = std::move(skeleton);
  }
  return out;
}

}  // namespace fpid::core
