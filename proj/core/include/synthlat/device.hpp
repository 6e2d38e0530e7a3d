#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "synthlat/common.hpp"

namespace synthlat::device {

/// Circuit constants of the waveguide resonator with its tunable SQUID-array
/// termination. Frequencies are angular (rad/s); the ratios are dimensionless.
struct DeviceParams {
  double omega_rt = 0.0;      ///< round-trip angular frequency pi*v_p/d
  double a_ratio = 0.0;       ///< inductance ratio l*d / L_s0
  double b_ratio = 0.0;       ///< capacitance ratio c*d / C_s
  double z0 = 50.0;           ///< waveguide wave impedance (ohm)
  int n_squid = 1;            ///< number of SQUIDs in the terminating array
  double omega_plasma = 0.0;  ///< array plasma frequency, omega_rt*sqrt(A*B)/pi
  double phi_zp_scale = 0.0;  ///< dimensionless prefactor of the zero-point phase

  /// Builds a validated parameter set; omega_plasma and phi_zp_scale are
  /// derived unless explicitly overridden.
  static DeviceParams make(double omega_rt, double a_ratio, double b_ratio,
                           double z0, int n_squid,
                           std::optional<double> omega_plasma = std::nullopt,
                           std::optional<double> phi_zp_scale = std::nullopt);

  void validate() const;
};

/// Linear map between flux-line bias voltage and normalized SQUID flux,
/// f = g_volt * (v - v_ss).
struct TuningCalibration {
  double g_volt = 0.0;   ///< voltage sensitivity (rad/V)
  double v_ss = 0.0;     ///< voltage offset cancelling stray flux (V)
  double r_tot = 0.0;    ///< series bias resistance (ohm), informational
  double mutual = 0.0;   ///< flux-line/SQUID mutual inductance (H), informational
};

/// Per-SQUID inductances and junction asymmetries of the series array.
struct SquidArray {
  std::vector<double> lj0;    ///< per-SQUID minimum Josephson inductance (H)
  std::vector<double> d_n;    ///< per-SQUID junction asymmetry, |d| < 1
  std::vector<double> eta0;   ///< residual phase shifts (rad), default 0

  /// N identical SQUIDs with total minimum inductance n * lj0_each.
  static SquidArray uniform(int n, double lj0_each, double asymmetry = 0.0);

  int size() const { return static_cast<int>(lj0.size()); }
  double total_lj0() const;
  double mean_lj0() const;
  /// Effective squared asymmetry <z_n(f=0) d_n^2> of the lumped model.
  double d_sq2() const;

  void validate() const;
};

struct FluxHarmonic {
  int k = 1;               ///< harmonic index of the modulation fundamental
  double amplitude = 0.0;  ///< normalized flux amplitude delta_f (rad)
  double phase = 0.0;      ///< drive phase theta_k (rad)
};

/// DC flux bias plus periodic modulation of the normalized SQUID flux
/// f(t) = f_dc + sum_k amplitude_k * cos(k * omega_mod * t + phase_k).
struct FluxDrive {
  double f_dc = 0.0;                     ///< F = pi * Phi_dc / Phi_0 (rad)
  std::vector<FluxHarmonic> harmonics;
  double omega_mod = 0.0;                ///< modulation fundamental (rad/s)

  double total_ac_amplitude() const;
  double evaluate(double t) const;       ///< instantaneous normalized flux f(t)

  /// Checks the lumped-array validity window: total AC swing below pi/4 and
  /// every visited flux at least `margin` away from the tangent poles.
  void validate(double margin = kDefaultFluxMargin) const;

  static constexpr double kDefaultFluxMargin = 0.15 * kPi;
};

/// Sorted solutions of the round-trip mode condition with their zero-point phases.
struct ModeSpectrum {
  std::vector<int> indices;      ///< mode numbers n
  std::vector<double> y;         ///< phase coordinates y_n = pi * omega_n / omega_rt
  std::vector<double> omega;     ///< mode angular frequencies (rad/s)
  std::vector<double> phi_zp;    ///< signed zero-point phases

  int find(int n) const;         ///< position of mode n; throws if absent
  double omega_of(int n) const { return omega[find(n)]; }
  double phi_zp_of(int n) const { return phi_zp[find(n)]; }
};

/// A(F) * sqrt scaling of the mode condition: a_ratio * sqrt(cos^2 f + d_sq2 sin^2 f).
double a_tilde(const DeviceParams& params, const SquidArray& squids, double f_dc);

/// Root of tan(y) + y/B = a_tilde/y on the branch y in [n*pi, (n+1/2)*pi):
/// bisection bracket followed by a Newton polish. The equation is monotone on
/// each branch. Throws NumericalError naming the branch when no root exists.
double solve_mode_y(int n, double a_tilde, double b_ratio);

/// Solves tan(y) + y/B = A~/y on each branch y in [n*pi, (n+1/2)*pi) for
/// n in [n_lo, n_hi], then evaluates frequencies and zero-point phases.
/// Throws NumericalError when a branch cannot be bracketed.
ModeSpectrum solve_mode_frequencies(const DeviceParams& params, const SquidArray& squids,
                                    double f_dc, int n_lo, int n_hi);

/// Mode frequency of mode n at flux-line voltage v under the tuning map.
double tuning_curve(const DeviceParams& params, const SquidArray& squids,
                    const TuningCalibration& calib, int n, double v);

/// Signed zero-point phase of mode n at DC flux f_dc.
double zero_point_phase(const DeviceParams& params, const SquidArray& squids,
                        double f_dc, int n);

enum class EjModel {
  full_sum,      ///< inverse sum of per-SQUID Josephson energies
  single_squid,  ///< lumped single-SQUID equivalent with effective asymmetry
};

enum class EnergyUnit {
  joule,
  angular,  ///< E / hbar, rad/s
};

/// Effective Josephson energy of the array at normalized flux f.
double effective_ej(const SquidArray& squids, double f, EjModel model,
                    EnergyUnit unit = EnergyUnit::angular);

/// Linear voltage-divider phase distribution across the array at flux f:
/// phi_n = x_n + z_n * phi_d with sum z_n = 1.
struct VoltageDivider {
  std::vector<double> z;
  std::vector<double> x;
};
VoltageDivider voltage_divider(const SquidArray& squids, double f);

/// One Fourier cosine coefficient of the drive D(t) = (E_J(f(t)) - E_J(F)) / 2.
struct DriveCoefficient {
  double amplitude = 0.0;  ///< D_k (rad/s); D_0 is signed, k >= 1 normalized >= 0
  double phase = 0.0;      ///< theta_k (rad), 0 for k = 0
};

/// Fourier cosine coefficients D_0..D_kmax of the drive over one modulation
/// period, by trapezoid quadrature with a convergence check.
std::vector<DriveCoefficient> derive_drive_coefficients(const SquidArray& squids,
                                                        const FluxDrive& drive,
                                                        int k_max);

/// Coupling rates J_{m,m+k} = D_k * phi_m * phi_{m+k} * exp(i theta_k) for all
/// m with both modes inside the spectrum. Requires coeffs.size() > k.
std::vector<Complex> coupling_rates(const ModeSpectrum& spectrum,
                                    const std::vector<DriveCoefficient>& coeffs,
                                    int k);

/// Static on-site frequency shifts 2 * D_0 * phi_m^2 produced by the mean of
/// the drive (negative for a symmetric array below half flux).
std::vector<double> onsite_modulation_shift(const ModeSpectrum& spectrum, double d0);

/// Bessel function of the first kind, order 1, by its ascending power series.
/// Accurate to ~1e-14 for |x| <= 8, which covers all admissible flux swings.
double bessel_j1(double x);

/// Closed-form nearest-neighbor coupling magnitude for a zero-disorder array
/// under a pure single-tone drive: |E_J0 * phi_m * phi_{m+1} * sin(F) * J1(df)|.
double nearest_neighbor_coupling_closed_form(const SquidArray& squids, double f_dc,
                                             double delta_f, double phi_m,
                                             double phi_m1);

}  // namespace synthlat::device
