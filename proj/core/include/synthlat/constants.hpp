#pragma once

#include <cmath>

namespace synthlat {

// CODATA 2018 values.
inline constexpr double kHbar = 1.054571817e-34;          // J s
inline constexpr double kFluxQuantum = 2.067833848e-15;   // Wb, h/2e
inline constexpr double kReducedFluxQuantum =
    kFluxQuantum / (2.0 * 3.14159265358979323846);        // Wb, hbar/2e

/// Dimensionless zero-point phase prefactor sqrt(hbar * Z0) / (hbar/2e).
inline double default_phase_scale(double z0_ohm) {
  return std::sqrt(kHbar * z0_ohm) / kReducedFluxQuantum;
}

}  // namespace synthlat
