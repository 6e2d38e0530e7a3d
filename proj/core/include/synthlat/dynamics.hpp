#pragma once

#include <vector>

#include "synthlat/common.hpp"
#include "synthlat/lattice.hpp"

namespace synthlat::dynamics {

/// One resonant input tone, addressed by relative site label.
struct InputTone {
  int site = 0;
  Complex amplitude{0.0, 0.0};  ///< beta_in (drive enters as sqrt(kappa_e) * beta_in)
};

struct Segment {
  double duration = 0.0;          ///< seconds; quantized to the sample grid
  bool modulation_on = false;     ///< couplings active during the segment
  double mod_phase_offset = 0.0;  ///< fundamental-phase offset applied to couplings
  std::vector<InputTone> inputs;  ///< resonant drives active during the segment
};

/// Ordered excitation / gap / modulation segments of one experiment.
struct PulseSequence {
  std::vector<Segment> segments;
  void validate() const;
};

/// Complex site amplitudes on a site x time grid (rotating frame).
struct SiteTimeTrace {
  std::vector<double> times;   ///< strictly increasing (s)
  std::vector<int> sites;      ///< relative site labels
  ComplexMatrix amps;          ///< rows = sites, cols = times

  int n_sites() const { return static_cast<int>(sites.size()); }
  int n_times() const { return static_cast<int>(times.size()); }
  int row_of(int site) const;  ///< throws if the site is not in the trace
  void validate() const;
};

/// Free evolution beta(t) = exp(-i H_eff t) beta(0) sampled on t_grid.
/// Exact per step (dense matrix exponential); t_grid must start at >= 0 and
/// be strictly increasing.
SiteTimeTrace evolve(const ComplexMatrix& h_eff, const ComplexVector& beta0,
                     const std::vector<double>& t_grid);
SiteTimeTrace evolve(const lattice::LatticeModel& model, const ComplexVector& beta0,
                     const std::vector<double>& t_grid);

inline constexpr double kDefaultSampleDt = 2e-9;  // mirrors a 500 MS/s record

/// Piecewise-constant evolution over the sequence: driven segments integrate
/// d beta/dt = -i H_eff beta + sqrt(kappa_e) beta_in exactly (augmented matrix
/// exponential per segment). Segment durations are rounded to whole samples.
SiteTimeTrace run_sequence(const lattice::LatticeModel& model, const PulseSequence& seq,
                           double dt = kDefaultSampleDt,
                           const ComplexVector& beta0 = ComplexVector());

/// Output field beta_out = beta_in - sqrt(kappa_e) beta for a recorded state
/// trace, with beta_in reconstructed from the sequence timing.
SiteTimeTrace output_field(const lattice::LatticeModel& model, const PulseSequence& seq,
                           const SiteTimeTrace& state, double dt = kDefaultSampleDt);

/// Bloch period 2 pi / |detuning| of the tilted lattice.
double bloch_period(double detuning);

/// Evolution on the tilted lattice from beta0 over [0, t_max].
SiteTimeTrace bloch_oscillate(const lattice::LatticeModel& model, double detuning,
                              const ComplexVector& beta0, double t_max,
                              double dt = kDefaultSampleDt);

/// Normalized overlap |<a, b>|^2 / (|a|^2 |b|^2).
double overlap_fidelity(const ComplexVector& a, const ComplexVector& b);

struct ReversalResult {
  SiteTimeTrace trace;
  double fidelity = 0.0;            ///< revival fidelity at the end of the echo
  bool even_coupling_warning = false;  ///< phase flip cannot reverse even hops
};

/// Modulation pulse, idle gap, then an identical pulse with the modulation
/// phase advanced by pi (couplings negated). Models with nonzero even-distance
/// couplings are flagged: those terms are invariant under the phase flip.
ReversalResult time_reverse_protocol(const lattice::LatticeModel& model, double pulse_len,
                                     double gap, const ComplexVector& amplitudes,
                                     double dt = kDefaultSampleDt);

/// Amplitude-weighted centroid sum_n n |beta_n|^2 / sum_n |beta_n|^2 per time
/// sample, in relative site labels.
std::vector<double> centroid_trajectory(const SiteTimeTrace& trace);

/// Samples with t >= t_from, optionally rebasing times to start at zero.
SiteTimeTrace trim_trace(const SiteTimeTrace& trace, double t_from, bool rebase = false);

}  // namespace synthlat::dynamics
