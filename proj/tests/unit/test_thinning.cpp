#include <doctest.h>

#include <random>

#include "fpid/core/error.hpp"
#include "fpid/core/thinning.hpp"
#include "helpers.hpp"

using namespace fpid::core;
using fpid::test::count_components;
using fpid::test::has_full_2x2;

namespace {

// Width one, same components as the input, a fixed point of thin() and a
// subset of the input.
void check_skeleton(const GrayImage& input, const GrayImage& skel) {
  CHECK_FALSE(has_full_2x2(skel));
  CHECK(count_components(skel) == count_components(input));
  CHECK(thin(skel) == skel);
  for (int y = 0; y < input.height(); ++y)
    for (int x = 0; x < input.width(); ++x)
      if (skel.at(x, y) == kRidge) CHECK(input.at(x, y) == kRidge);
}

}  // namespace

TEST_CASE("thin leaves a one-pixel line unchanged") {
  GrayImage img(30, 10);
  for (int x = 3; x < 27; ++x) img.at(x, 5) = kRidge;
  CHECK(thin(img) == img);

  GrayImage diag(20, 20);
  for (int i = 2; i < 18; ++i) diag.at(i, i) = kRidge;
  CHECK(thin(diag) == diag);
}

TEST_CASE("thick bar thins to a centred line") {
  GrayImage img(40, 15);
  for (int y = 4; y <= 10; ++y)
    for (int x = 5; x < 35; ++x) img.at(x, y) = kRidge;
  const auto s = thin(img);
  check_skeleton(img, s);
  for (int x = 10; x < 30; ++x) {
    int count = 0, row = -1;
    for (int y = 0; y < 15; ++y)
      if (s.at(x, y) == kRidge) {
        ++count;
        row = y;
      }
    CHECK(count == 1);
    CHECK(std::abs(row - 7) <= 1);
  }
}

TEST_CASE("disc thins to a width-one connected skeleton") {
  GrayImage img(50, 50);
  fpid::test::fill_disc(img, 25, 25, 15);
  const auto s = thin(img);
  check_skeleton(img, s);
  CHECK(fpid::test::ridge_pixels(s) >= 1);
  CHECK(fpid::test::ridge_pixels(s) < fpid::test::ridge_pixels(img) / 10);
}

TEST_CASE("2x2 square keeps one component") {
  GrayImage img(6, 6);
  img.at(2, 2) = img.at(3, 2) = img.at(2, 3) = img.at(3, 3) = kRidge;
  const auto s = thin(img);
  CHECK(count_components(s) == 1);
  CHECK_FALSE(has_full_2x2(s));
}

TEST_CASE("random blobs thin to width-one skeletons with the same components") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    CAPTURE(trial);
    GrayImage img(64, 64);
    std::uniform_real_distribution<double> pos(8, 56), rad(1.5, 7);
    const int blobs = 1 + static_cast<int>(rng() % 6);
    for (int b = 0; b < blobs; ++b) {
      if (rng() % 2) fpid::test::fill_disc(img, pos(rng), pos(rng), rad(rng));
      else fpid::test::draw_segment(img, pos(rng), pos(rng), pos(rng), pos(rng), rad(rng) / 2);
    }
    check_skeleton(img, thin(img));
  }
}

TEST_CASE("crossing number cases") {
  GrayImage img(7, 7);
  // isolated
  img.at(3, 3) = kRidge;
  CHECK(crossing_number(img, 3, 3) == 0);
  // ending
  img.at(4, 3) = kRidge;
  CHECK(crossing_number(img, 3, 3) == 1);
  // line through
  img.at(2, 3) = kRidge;
  CHECK(crossing_number(img, 3, 3) == 2);
  // bifurcation
  img.at(3, 2) = kRidge;
  CHECK(crossing_number(img, 3, 3) == 3);
  // crossing
  img.at(3, 4) = kRidge;
  CHECK(crossing_number(img, 3, 3) == 4);
  // adjacent neighbours form one run
  GrayImage corner(5, 5);
  corner.at(2, 2) = corner.at(3, 2) = corner.at(3, 3) = kRidge;
  CHECK(crossing_number(corner, 2, 2) == 1);

  CHECK_THROWS_AS(crossing_number(img, 0, 3), PreconditionError);
  CHECK_THROWS_AS(crossing_number(img, 3, 6), PreconditionError);
}
