#include "fpid/core/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "fpid/core/error.hpp"

namespace fpid::core {

LocalDescriptor build_descriptor(const MinutiaeTemplate& t, std::size_t index,
                                 std::size_t neighbors) {
  const std::size_t n = t.size();
  if (n < 2) throw PreconditionError("descriptor needs at least two minutiae");
  if (index >= n) throw PreconditionError("minutia index out of range");

  const Minutia& c = t.minutiae[index];
  struct Candidate {
    double dist;
    std::size_t j;
  };
  std::vector<Candidate> cand;
  cand.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == index) continue;
    const double dx = t.minutiae[j].x - c.x;
    const double dy = t.minutiae[j].y - c.y;
    cand.push_back({std::hypot(dx, dy), j});
  }
  const std::size_t k = std::min(neighbors, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                    [](const Candidate& a, const Candidate& b) {
                      return std::tie(a.dist, a.j) < std::tie(b.dist, b.j);
                    });

  LocalDescriptor d;
  d.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Minutia& nb = t.minutiae[cand[i].j];
    const double heading = std::atan2(static_cast<double>(nb.y - c.y), static_cast<double>(nb.x - c.x));
    d.push_back({cand[i].dist, wrap_two_pi(heading - c.direction),
                 wrap_two_pi(nb.direction - c.direction)});
  }
  return d;
}

double descriptor_cost(const LocalDescriptor& a, const LocalDescriptor& b, const MatchParams& params) {
  const std::size_t len = std::min(a.size(), b.size());
  if (len == 0) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    total += (std::abs(a[k].distance - b[k].distance) / params.distance_tolerance +
              angle_diff(a[k].radial_angle, b[k].radial_angle) / params.angle_tolerance +
              angle_diff(a[k].direction_delta, b[k].direction_delta) / params.angle_tolerance) /
             3.0;
  }
  return total / static_cast<double>(len);
}

namespace {

struct Hypothesis {
  double cost;
  std::size_t qi;
  std::size_t rj;
};

std::vector<Hypothesis> best_hypotheses(const MinutiaeTemplate& q, const MinutiaeTemplate& r,
                                        const MatchParams& params) {
  std::vector<LocalDescriptor> qd, rd;
  qd.reserve(q.size());
  rd.reserve(r.size());
  for (std::size_t i = 0; i < q.size(); ++i) qd.push_back(build_descriptor(q, i, params.neighbors));
  for (std::size_t j = 0; j < r.size(); ++j) rd.push_back(build_descriptor(r, j, params.neighbors));

  std::vector<Hypothesis> all;
  all.reserve(q.size() * r.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j) all.push_back({descriptor_cost(qd[i], rd[j], params), i, j});

  const std::size_t c = std::min(params.hypotheses, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(c), all.end(),
                    [](const Hypothesis& a, const Hypothesis& b) {
                      return std::tie(a.cost, a.qi, a.rj) < std::tie(b.cost, b.qi, b.rj);
                    });
  all.resize(c);
  return all;
}

// Greedy nearest-first one-to-one pairing after aligning q's pivot onto r's.
std::size_t pair_under_alignment(const MinutiaeTemplate& q, const MinutiaeTemplate& r,
                                 const Hypothesis& h, const MatchParams& params) {
  const Minutia& a = q.minutiae[h.qi];
  const Minutia& b = r.minutiae[h.rj];
  const double rot = b.direction - a.direction;
  const double cs = std::cos(rot), sn = std::sin(rot);

  struct Placed {
    double x, y, dir;
  };
  std::vector<Placed> moved;
  moved.reserve(q.size());
  for (const auto& m : q.minutiae) {
    const double dx = m.x - a.x, dy = m.y - a.y;
    moved.push_back({cs * dx - sn * dy + b.x, sn * dx + cs * dy + b.y, m.direction + rot});
  }

  struct Pair {
    double dist;
    std::size_t qi, rj;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      const auto& m = r.minutiae[j];
      const double d = std::hypot(moved[i].x - m.x, moved[i].y - m.y);
      if (d > params.distance_tolerance) continue;
      if (angle_diff(moved[i].dir, m.direction) > params.angle_tolerance) continue;
      pairs.push_back({d, i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    return std::tie(x.dist, x.qi, x.rj) < std::tie(y.dist, y.qi, y.rj);
  });

  std::vector<bool> q_used(q.size(), false), r_used(r.size(), false);
  std::size_t m = 0;
  for (const auto& p : pairs) {
    if (q_used[p.qi] || r_used[p.rj]) continue;
    q_used[p.qi] = true;
    r_used[p.rj] = true;
    ++m;
  }
  return m;
}

}  // namespace

std::size_t matched_pairs(const MinutiaeTemplate& query, const MinutiaeTemplate& record,
                          const MatchParams& params) {
  if (query.size() < 2 || record.size() < 2) return 0;
  std::size_t best = 0;
  for (const auto& h : best_hypotheses(query, record, params))
    best = std::max(best, pair_under_alignment(query, record, h, params));
  return best;
}

double match_templates(const MinutiaeTemplate& query, const MinutiaeTemplate& record,
                       const MatchParams& params) {
  const auto m = static_cast<double>(matched_pairs(query, record, params));
  if (m == 0.0) return 0.0;
  return (m * m) / (static_cast<double>(query.size()) * static_cast<double>(record.size()));
}

}  // namespace fpid::core
