#pragma once

#include <cstdint>
#include <vector>

#include "synthlat/common.hpp"
#include "synthlat/dynamics.hpp"
#include "synthlat/scattering.hpp"

namespace synthlat::signal_chain {

/// Carrier-phase jitter of the raster readout. Each site's acquisition is one
/// "shot"; the local-oscillator phase re-randomizes on every retune and the
/// generator timebases drift slowly between shots, so the realized phase is
/// constant within a shot and varies shot to shot. Reproducible from the seed.
struct JitterModel {
  std::uint64_t seed = 0;
  double theta_rand = 0.0;       ///< half-width of the uniform LO phase draw (rad)
  double drift_rad_per_s = 0.0;  ///< combined timebase drift slope across shots
  double shot_interval = 0.0;    ///< wall-clock spacing of raster shots (s)

  /// Phase applied to the shot acquiring the given site row.
  double shot_phase(int shot_index) const;
};

/// Forward measurement model: multiplies each site row by
/// -sqrt(kappa_e) * G_out * exp(i omega_lab T_out) and injects the per-shot
/// jitter phase.
dynamics::SiteTimeTrace apply_channel(const dynamics::SiteTimeTrace& trace,
                                      const lattice::LatticeModel& model,
                                      const scattering::ChannelModel& channel,
                                      const JitterModel& jitter = {});

/// Reference-tone record sharing the jitter realization of apply_channel:
/// unit carrier per shot with the same per-shot phase.
dynamics::SiteTimeTrace jitter_reference(const dynamics::SiteTimeTrace& like,
                                         const JitterModel& jitter);

/// Removes the per-shot reference phase (time-averaged per site row) from the
/// signal trace. Corrected phases differ from the jitter-free truth by a
/// site-independent constant. Throws NumericalError when the reference
/// amplitude is below threshold.
dynamics::SiteTimeTrace phase_reference_correct(const dynamics::SiteTimeTrace& trace_a,
                                                const dynamics::SiteTimeTrace& trace_b_reference,
                                                double amplitude_threshold = 1e-12);

/// Trailing moving average along time (window samples; partial windows at the
/// start). The frequency response is the length-`window` Dirichlet kernel,
/// i.e. the sampled sinc lowpass of the raster readout.
dynamics::SiteTimeTrace smooth(const dynamics::SiteTimeTrace& trace, int window = 16);

}  // namespace synthlat::signal_chain
