#include "fpid/core/thinning.hpp"

#include <array>
#include <vector>

#include "fpid/core/error.hpp"

namespace fpid::core {

namespace {

// Ridge grid with a one-pixel background frame so neighbourhood reads never
// need bounds checks.
class RidgeGrid {
 public:
  explicit RidgeGrid(const GrayImage& img)
      : w_(img.width()), h_(img.height()),
        cells_(static_cast<std::size_t>(w_ + 2) * static_cast<std::size_t>(h_ + 2), 0) {
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x) set(x, y, img.at(x, y) == kRidge);
  }

  bool get(int x, int y) const { return cells_[idx(x, y)] != 0; }
  void set(int x, int y, bool v) { cells_[idx(x, y)] = v ? 1 : 0; }
  int width() const { return w_; }
  int height() const { return h_; }

  // P2..P9 in Zhang-Suen order: N, NE, E, SE, S, SW, W, NW.
  std::array<int, 8> ring(int x, int y) const {
    return {get(x, y - 1), get(x + 1, y - 1), get(x + 1, y), get(x + 1, y + 1),
            get(x, y + 1), get(x - 1, y + 1), get(x - 1, y), get(x - 1, y - 1)};
  }

  GrayImage to_image() const {
    GrayImage out(w_, h_, kBackground);
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x)
        if (get(x, y)) out.at(x, y) = kRidge;
    return out;
  }

 private:
  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y + 1) * static_cast<std::size_t>(w_ + 2) +
           static_cast<std::size_t>(x + 1);
  }

  int w_, h_;
  std::vector<std::uint8_t> cells_;
};

int neighbour_count(const std::array<int, 8>& p) {
  int n = 0;
  for (int v : p) n += v;
  return n;
}

int zero_one_transitions(const std::array<int, 8>& p) {
  int a = 0;
  for (int i = 0; i < 8; ++i)
    if (p[i] == 0 && p[(i + 1) % 8] == 1) ++a;
  return a;
}

// Yokoi connectivity number for 8-connected foreground. A pixel is simple
// (deletable without changing topology) iff this is 1.
int yokoi_c8(const std::array<int, 8>& p) {
  // Yokoi order: E, NE, N, NW, W, SW, S, SE.
  const std::array<int, 8> q = {p[2], p[1], p[0], p[7], p[6], p[5], p[4], p[3]};
  auto inv = [&](int k) { return 1 - q[k % 8]; };
  int c = 0;
  for (int k = 0; k < 8; k += 2) c += inv(k) - inv(k) * inv(k + 1) * inv(k + 2);
  return c;
}

bool deletable_now(const RidgeGrid& g, int x, int y) {
  const auto p = g.ring(x, y);
  return neighbour_count(p) >= 2 && yokoi_c8(p) == 1;
}

bool zhang_suen_candidate(const std::array<int, 8>& p, int pass) {
  const int b = neighbour_count(p);
  if (b < 2 || b > 6) return false;
  if (zero_one_transitions(p) != 1) return false;
  const int n = p[0], e = p[2], s = p[4], w = p[6];
  if (pass == 0) return n * e * s == 0 && e * s * w == 0;
  return n * e * w == 0 && n * s * w == 0;
}

bool has_corner_pair(const std::array<int, 8>& p) {
  const int n = p[0], e = p[2], s = p[4], w = p[6];
  return (n && e) || (e && s) || (s && w) || (w && n);
}

}  // namespace

GrayImage thin(const GrayImage& binary) {
  RidgeGrid g(binary);
  std::vector<std::pair<int, int>> marked;

  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      marked.clear();
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
          if (g.get(x, y) && zhang_suen_candidate(g.ring(x, y), pass)) marked.emplace_back(x, y);
      for (auto [x, y] : marked) {
        if (deletable_now(g, x, y)) {
          g.set(x, y, false);
          changed = true;
        }
      }
    }
  }

  // Staircase cleanup: a simple pixel whose two 4-neighbours touch each other
  // diagonally is redundant.
  changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < g.height(); ++y) {
      for (int x = 0; x < g.width(); ++x) {
        if (!g.get(x, y)) continue;
        const auto p = g.ring(x, y);
        if (has_corner_pair(p) && neighbour_count(p) >= 2 && yokoi_c8(p) == 1) {
          g.set(x, y, false);
          changed = true;
        }
      }
    }
  }
  return g.to_image();
}

int crossing_number(const GrayImage& skel, int x, int y) {
  if (x < 1 || y < 1 || x >= skel.width() - 1 || y >= skel.height() - 1) {
    throw PreconditionError("crossing number undefined on the 1-pixel image border");
  }
  auto ridge = [&](int dx, int dy) { return skel.at(x + dx, y + dy) == kRidge ? 1 : 0; };
  const std::array<int, 8> p = {ridge(0, -1), ridge(1, -1), ridge(1, 0),  ridge(1, 1),
                                ridge(0, 1),  ridge(-1, 1), ridge(-1, 0), ridge(-1, -1)};
  int sum = 0;
  for (int i = 0; i < 8; ++i) sum += p[i] != p[(i + 1) % 8] ? 1 : 0;
  return sum / 2;
}

}  // namespace fpid::core
