#pragma once

#include <numbers>

namespace levcav {

// CODATA 2018 exact / recommended values.
struct PhysicalConstants {
  static constexpr double c = 299792458.0;          // m/s
  static constexpr double hbar = 1.054571817e-34;   // J s
  static constexpr double kB = 1.380649e-23;        // J/K
  static constexpr double eps0 = 8.8541878128e-12;  // F/m
};

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Hz -> rad/s
constexpr double angular(double hz) { return two_pi * hz; }
/// rad/s -> Hz
constexpr double in_hz(double rad_per_s) { return rad_per_s / two_pi; }

}  // namespace levcav
