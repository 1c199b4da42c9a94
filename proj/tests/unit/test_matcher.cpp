#include <doctest.h>

#include <random>

#include "fpid/core/error.hpp"
#include "fpid/core/matcher.hpp"
#include "helpers.hpp"

using namespace fpid::core;
using fpid::test::random_template;
using fpid::test::rigid_transform;

TEST_CASE("descriptor matches the full-sort reference") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_template(rng, 3 + trial % 30);
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t k : {1u, 5u, 8u}) {
        const auto a = build_descriptor(t, i, k);
        const auto b = fpid::test::reference_descriptor(t, i, k);
        REQUIRE(a.size() == b.size());
        for (std::size_t n = 0; n < a.size(); ++n) {
          CHECK(a[n].distance == doctest::Approx(b[n].distance).epsilon(1e-12));
          CHECK(angle_diff(a[n].radial_angle, b[n].radial_angle) < 1e-9);
          CHECK(angle_diff(a[n].direction_delta, b[n].direction_delta) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("descriptor preconditions") {
  MinutiaeTemplate t{{{1, 1, 0.0, MinutiaKind::Ending}}, 10, 10};
  CHECK_THROWS_AS(build_descriptor(t, 0), PreconditionError);
  t.minutiae.push_back({5, 5, 0.0, MinutiaKind::Ending});
  CHECK(build_descriptor(t, 1).size() == 1);
  CHECK_THROWS_AS(build_descriptor(t, 2), PreconditionError);
}

TEST_CASE("descriptor cost") {
  const LocalDescriptor a = {{10, 0.5, 1.0}, {20, 1.0, 2.0}};
  CHECK(descriptor_cost(a, a) == 0.0);
  LocalDescriptor b = a;
  b[0].distance += 12;  // one full tolerance on one of three terms of one of two tuples
  CHECK(descriptor_cost(a, b) == doctest::Approx(1.0 / 6.0));
  b = a;
  b[1].radial_angle += kPi / 9;
  CHECK(descriptor_cost(a, b) == doctest::Approx(1.0 / 6.0));
  // only the common prefix counts
  const LocalDescriptor c = {a[0]};
  CHECK(descriptor_cost(a, c) == 0.0);
  CHECK(descriptor_cost({}, a) == 0.0);
}

TEST_CASE("self similarity is one") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 40; ++trial) {
    const auto t = random_template(rng, 2 + trial);
    CHECK(match_templates(t, t) == 1.0);
    CHECK(matched_pairs(t, t) == t.size());
  }
}

TEST_CASE("empty and single-minutia templates score zero") {
  std::mt19937_64 rng(2);
  const auto t = random_template(rng, 20);
  const MinutiaeTemplate empty{{}, 256, 256};
  CHECK(match_templates(empty, t) == 0.0);
  CHECK(match_templates(t, empty) == 0.0);
  CHECK(match_templates(empty, empty) == 0.0);
  MinutiaeTemplate one{{t.minutiae[0]}, 256, 256};
  CHECK(match_templates(one, t) == 0.0);
}

TEST_CASE("rigid transforms keep most pairs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rot(-15 * kPi / 180, 15 * kPi / 180), tr(-10, 10);
  for (int trial = 0; trial < 60; ++trial) {
    const auto t = random_template(rng, 20 + trial % 21);
    const auto moved = rigid_transform(t, rot(rng), tr(rng), tr(rng));
    const double n = static_cast<double>(t.size());
    const double bound = std::pow(std::floor(0.9 * n) / n, 2);
    CHECK(match_templates(moved, t) >= bound);
    CHECK(match_templates(t, moved) >= bound);
  }
}

TEST_CASE("rotation by 15 degrees and shift (5,-3)") {
  std::mt19937_64 rng(4);
  const auto t = random_template(rng, 30);
  CHECK(match_templates(rigid_transform(t, 15 * kPi / 180, 5, -3), t) >= 0.9);
}

TEST_CASE("similarity is bounded and deterministic") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = random_template(rng, 5 + trial % 30);
    const auto b = random_template(rng, 5 + (trial * 7) % 30);
    const double s = match_templates(a, b);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    CHECK(match_templates(a, b) == s);
    const auto m = static_cast<double>(matched_pairs(a, b));
    CHECK(m <= static_cast<double>(std::min(a.size(), b.size())));
    CHECK(s == m * m / (static_cast<double>(a.size()) * static_cast<double>(b.size())));
  }
}

TEST_CASE("dropping query minutiae lowers the score as m^2/(|q||r|)") {
  std::mt19937_64 rng(6);
  const auto t = random_template(rng, 30);
  auto q = t;
  q.minutiae.resize(27);
  CHECK(match_templates(q, t) == doctest::Approx(27.0 * 27.0 / (27.0 * 30.0)));
}

TEST_CASE("unrelated templates score low") {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    worst = std::max(worst, match_templates(random_template(rng, 30), random_template(rng, 30)));
  }
  CHECK(worst < 0.5);
}
