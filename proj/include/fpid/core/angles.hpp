#pragma once

#include <cmath>
#include <numbers>

namespace fpid::core {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into [0, 2pi).
inline double wrap_two_pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a value just below 0 can round up to exactly 2pi
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Wraps an angle into [0, pi).
inline double wrap_pi(double a) {
  double r = std::fmod(a, kPi);
  if (r < 0.0) r += kPi;
  if (r >= kPi) r = 0.0;
  return r;
}

/// Absolute angular distance in [0, pi].
inline double angle_diff(double a, double b) {
  double d = wrap_two_pi(a - b);
  return d > kPi ? kTwoPi - d : d;
}

}  // namespace fpid::core
