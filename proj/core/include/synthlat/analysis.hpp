#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "synthlat/common.hpp"
#include "synthlat/device.hpp"
#include "synthlat/dynamics.hpp"
#include "synthlat/lattice.hpp"
#include "synthlat/scattering.hpp"

namespace synthlat::analysis {

/// Nearest-neighbor cosine-band fit omega(k) = 2 |J| cos(k + theta).
struct NnBandFit {
  double j_mag = 0.0;      ///< |J| (rad/s)
  double theta_mod = 0.0;  ///< band phase (rad)
  double rms_residual = 0.0;
};

/// Quasimomentum/frequency power map with the per-k ridge and its band fit.
struct DispersionResult {
  std::vector<double> k_grid;       ///< dimensionless k in (-pi, pi]
  std::vector<double> omega_grid;   ///< rad/s
  RealMatrix power;                 ///< rows = k, cols = omega, |FFT|^2
  std::vector<std::pair<double, double>> ridge;  ///< (k, omega_peak)
  std::vector<double> ridge_power;  ///< peak power per ridge point
  NnBandFit fit;
  bool ridge_ambiguous = false;     ///< secondary maxima comparable to the ridge
};

struct DispersionOptions {
  int time_zero_pad = 4;        ///< zero-padding factor along time
  bool correct_channel = true;  ///< divide out the measurement-chain factor
};

/// Corrects the measured trace for the output chain, 2D-Fourier-transforms the
/// site x time grid (e^{ikn} components map to positive k, e^{-i omega t} to
/// positive omega), locates per-k ridge maxima with parabolic refinement and
/// fits the nearest-neighbor band.
DispersionResult extract_dispersion(const dynamics::SiteTimeTrace& trace,
                                    const lattice::LatticeModel& model,
                                    const scattering::ChannelModel& channel,
                                    const DispersionOptions& options = {});

enum class BandModel {
  nn,             ///< 2|J| cos(k + theta)
  second_nn,      ///< 2|J2| cos(2k)
  second_nn_h2,   ///< 2|J2| cos(2k) + 2|J4| cos(4k)
  two_tone,       ///< 2|J1| cos k + 2|J2| cos(2k + t2) + 2|J4| cos(4k + 2 t2)
};

/// Band-model fit of a ridge. coefficients holds the |J| magnitudes in model
/// order; theta2 is the gauge-invariant two-tone phase (zero elsewhere).
struct BandFit {
  BandModel model = BandModel::nn;
  std::vector<double> coefficients;  ///< rad/s
  double theta = 0.0;                ///< nn band phase
  double theta2 = 0.0;               ///< two-tone relative phase
  double rms_residual = 0.0;
};

BandFit fit_band_models(const std::vector<std::pair<double, double>>& ridge,
                        BandModel model);

/// Tuning-model least squares over (G, V_ss, omega_rt, A, B, d_sq2).
struct TuningFitResult {
  double g_volt = 0.0;
  double v_ss = 0.0;
  double omega_rt = 0.0;
  double a_ratio = 0.0;
  double b_ratio = 0.0;
  double d_sq2 = 0.0;
  RealMatrix jtj;                     ///< curvature at the solution
  RealVector relative_uncertainty;    ///< per parameter, same order as above
  bool degenerate_b_dsq = false;      ///< B and d_sq2 not constrained by the data
  bool converged = false;
  int iterations = 0;
};

struct TuningFitGuess {
  double g_volt;
  double v_ss;
  double omega_rt;
  double a_ratio;
  double b_ratio;
  double d_sq2;
};

/// Fits mode-n tuning samples (voltage, omega_n) to the round-trip mode
/// condition. Samples must span at least one flux period. Throws
/// NumericalError on non-convergence or degenerate (flat) data.
TuningFitResult fit_tuning(const std::vector<std::pair<double, double>>& samples,
                           int mode_n, const TuningFitGuess& guess);

/// Pairwise interference calibration: theta_calib per (n, n+1) pair plus the
/// recovered amplitude-ratio scale.
struct CalibrationResult {
  std::vector<int> pair_lower_site;
  std::vector<double> theta_calib;   ///< in (-pi, pi]
  std::vector<double> contrast;      ///< fitted sine amplitude b (>= 0)
  std::vector<double> offset;        ///< fitted constant a
  std::vector<double> r_scale;       ///< recovered on-chip amplitude ratio
  std::vector<bool> weak_contrast;   ///< b below the noise floor
};

/// Simulates two-site interference over a drive-phase sweep for each pair and
/// fits |beta_n(t_probe)|^2 = a + b sin(-theta + theta_calib) with b > 0.
/// input_phase_offsets, when present, model the unknown per-site input-channel
/// phases being calibrated (radians per relative site).
CalibrationResult calibrate_phases(const lattice::LatticeModel& model,
                                   const std::vector<int>& pair_lower_sites,
                                   const std::vector<double>& theta_sweep,
                                   double t_probe, double amplitude_ratio = 1.0,
                                   const std::vector<double>& input_phase_offsets = {});

/// Drive phases theta_awg that chain the pairwise calibrations into an N-site
/// wavepacket with uniform target k_eff: theta_{n+1} - theta_n = theta_calib_n - k_eff.
std::vector<double> compose_awg_phases(const std::vector<double>& theta_calib,
                                       double k_eff);

/// Truncated-Gaussian wavepacket specification.
struct WavepacketSpec {
  double sigma = 2.5;   ///< envelope width (sites)
  double k_eff = 0.0;   ///< phase gradient per site (rad)
  int n_sites = 5;      ///< occupied window; amplitudes vanish outside
  int center = 0;       ///< center site label
};

/// beta_n = N0 exp(-(n-mu)^2 / 2 sigma^2) exp(i k_eff (n-mu)) on the window,
/// zero outside, normalized to unit norm. Indexed over `sites` labels.
ComplexVector make_wavepacket(const WavepacketSpec& spec, const std::vector<int>& sites);

struct GroupVelocityFit {
  double v_g = 0.0;       ///< sites per second
  double t_start = 0.0;
  double t_end = 0.0;
  int n_points = 0;
};

/// Linear fit of the amplitude-weighted centroid against time, restricted to
/// the window before the centroid comes within 2 sigma of a barrier or edge.
GroupVelocityFit group_velocity(const dynamics::SiteTimeTrace& trace, double sigma,
                                const std::vector<int>& barrier_sites = {});

/// Elastic scattering amplitudes off a single detuned site.
struct DefectScatteringResult {
  Complex a_r{0.0, 0.0};
  Complex a_t{0.0, 0.0};
  double k_i = 0.0;
  double delta = 0.0;
  double v_g = 0.0;  ///< group velocity at k_i (sites/s)
};

/// A_r = -delta / (delta - i v_g), A_t = -i v_g / (delta - i v_g) with
/// v_g = -2 |J| sin(k_i + arg J). The degenerate point delta = v_g = 0 is
/// rejected.
DefectScatteringResult defect_scattering(double delta, Complex j, double k_i);

}  // namespace synthlat::analysis
