#pragma once

#include "levcav/params.hpp"

namespace fixture {

inline levcav::ParticleSpec particle() { return {169e-9, 1950.0, 2.1}; }
inline levcav::CavitySpec cavity() { return {10.97e-3, 76000.0, 1064e-9, 41e-6}; }
inline constexpr double x0 = -1.565e-3;  // from cavity center; x0' = 3.92 mm

}  // namespace fixture
