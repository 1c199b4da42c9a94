#pragma once

// Shared fixtures and independent reference implementations for tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "fpid/core/angles.hpp"
#include "fpid/core/image.hpp"
#include "fpid/core/matcher.hpp"
#include "fpid/core/minutiae.hpp"

namespace fpid::test {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("fpid-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

// Paints a dark stroke of the given radius between two points.
inline void draw_segment(core::GrayImage& img, double x0, double y0, double x1, double y1, double radius,
                         std::uint8_t value = 0) {
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double vx = x1 - x0, vy = y1 - y0;
      const double len2 = vx * vx + vy * vy;
      double t = len2 > 0 ? ((x - x0) * vx + (y - y0) * vy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double dx = x - (x0 + t * vx), dy = y - (y0 + t * vy);
      if (dx * dx + dy * dy <= radius * radius) img.at(x, y) = value;
    }
  }
}

inline void fill_disc(core::GrayImage& img, double cx, double cy, double r, std::uint8_t value = 0) {
  draw_segment(img, cx, cy, cx, cy, r, value);
}

inline std::size_t ridge_pixels(const core::GrayImage& img, std::uint8_t ridge = 0) {
  return static_cast<std::size_t>(std::count(img.pixels().begin(), img.pixels().end(), ridge));
}

// 8-connected components of pixels equal to `ridge`, by BFS.
inline std::size_t count_components(const core::GrayImage& img, std::uint8_t ridge = 0) {
  const int w = img.width(), h = img.height();
  std::vector<char> seen(static_cast<std::size_t>(w) * h, 0);
  std::size_t comps = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (img.at(x, y) != ridge || seen[y * w + x]) continue;
      ++comps;
      std::queue<std::pair<int, int>> q;
      q.push({x, y});
      seen[y * w + x] = 1;
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (!img.contains(nx, ny) || img.at(nx, ny) != ridge || seen[ny * w + nx]) continue;
            seen[ny * w + nx] = 1;
            q.push({nx, ny});
          }
      }
    }
  }
  return comps;
}

inline bool has_full_2x2(const core::GrayImage& img, std::uint8_t ridge = 0) {
  for (int y = 0; y + 1 < img.height(); ++y)
    for (int x = 0; x + 1 < img.width(); ++x)
      if (img.at(x, y) == ridge && img.at(x + 1, y) == ridge && img.at(x, y + 1) == ridge &&
          img.at(x + 1, y + 1) == ridge)
        return true;
  return false;
}

inline std::size_t count_kind(const core::MinutiaeTemplate& t, core::MinutiaKind k) {
  return static_cast<std::size_t>(
      std::count_if(t.minutiae.begin(), t.minutiae.end(), [&](const core::Minutia& m) { return m.kind == k; }));
}

// Template with n minutiae at least `min_sep` apart inside the centred disc
// of radius `r`.
// Hand-drawn strokes leave most blocks empty, so only the image border is
// kept out of bounds.
inline core::ExtractionParams stroke_params() {
  core::ExtractionParams p;
  p.border_margin = 2;
  return p;
}

inline core::GrayImage line_image() {
  core::GrayImage img(128, 64);
  draw_segment(img, 20, 32, 108, 32, 2.5);
  return img;
}

inline core::GrayImage y_image() {
  core::GrayImage img(128, 128);
  draw_segment(img, 64, 64, 64, 115, 2.5);
  draw_segment(img, 64, 64, 24, 20, 2.5);
  draw_segment(img, 64, 64, 104, 20, 2.5);
  return img;
}

inline core::MinutiaeTemplate random_template(std::mt19937_64& rng, std::size_t n, int size = 256,
                                              double r = 90.0, double min_sep = 20.0) {
  core::MinutiaeTemplate t;
  t.width = size;
  t.height = size;
  std::uniform_real_distribution<double> u(-r, r), ang(0.0, core::kTwoPi);
  std::size_t attempts = 0;
  while (t.minutiae.size() < n && attempts++ < 100000) {
    const double dx = u(rng), dy = u(rng);
    if (dx * dx + dy * dy > r * r) continue;
    const int x = static_cast<int>(std::lround(size / 2.0 + dx));
    const int y = static_cast<int>(std::lround(size / 2.0 + dy));
    const bool close = std::any_of(t.minutiae.begin(), t.minutiae.end(), [&](const core::Minutia& m) {
      return std::hypot(m.x - x, m.y - y) < min_sep;
    });
    if (close) continue;
    core::Minutia m;
    m.x = x;
    m.y = y;
    m.direction = core::wrap_two_pi(ang(rng));
    m.kind = (rng() & 1) ? core::MinutiaKind::Ending : core::MinutiaKind::Bifurcation;
    t.minutiae.push_back(m);
  }
  return t;
}

// Rotates about the image centre, translates, rounds to the pixel grid.
inline core::MinutiaeTemplate rigid_transform(const core::MinutiaeTemplate& t, double rot, double tx, double ty) {
  core::MinutiaeTemplate out = t;
  const double cx = t.width / 2.0, cy = t.height / 2.0;
  for (auto& m : out.minutiae) {
    const double dx = m.x - cx, dy = m.y - cy;
    m.x = static_cast<int>(std::lround(cx + std::cos(rot) * dx - std::sin(rot) * dy + tx));
    m.y = static_cast<int>(std::lround(cy + std::sin(rot) * dx + std::cos(rot) * dy + ty));
    m.direction = core::wrap_two_pi(m.direction + rot);
  }
  return out;
}

// Reference neighbourhood descriptor: full sort of all other minutiae.
inline core::LocalDescriptor reference_descriptor(const core::MinutiaeTemplate& t, std::size_t i, std::size_t k) {
  struct Entry {
    double d;
    std::size_t j;
  };
  std::vector<Entry> all;
  const auto& c = t.minutiae[i];
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (j == i) continue;
    all.push_back({std::sqrt(double((t.minutiae[j].x - c.x) * (t.minutiae[j].x - c.x) +
                                    (t.minutiae[j].y - c.y) * (t.minutiae[j].y - c.y))),
                   j});
  }
  std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.d < b.d; });
  core::LocalDescriptor out;
  for (std::size_t n = 0; n < std::min(k, all.size()); ++n) {
    const auto& nb = t.minutiae[all[n].j];
    double radial = std::atan2(double(nb.y - c.y), double(nb.x - c.x)) - c.direction;
    double delta = nb.direction - c.direction;
    while (radial < 0) radial += 2 * M_PI;
    while (radial >= 2 * M_PI) radial -= 2 * M_PI;
    while (delta < 0) delta += 2 * M_PI;
    while (delta >= 2 * M_PI) delta -= 2 * M_PI;
    out.push_back({all[n].d, radial, delta});
  }
  return out;
}

}  // namespace fpid::test
