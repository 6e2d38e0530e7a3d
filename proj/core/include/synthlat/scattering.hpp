#pragma once

#include <vector>

#include "synthlat/common.hpp"
#include "synthlat/lattice.hpp"

namespace synthlat::scattering {

/// Frequency-resolved scattering matrices; s[f](out, in) on omega_grid[f]
/// (rotating-frame angular frequencies).
struct ScatteringResult {
  enum class Kind { with_direct_reflection, transient };
  std::vector<double> omega_grid;
  std::vector<ComplexMatrix> s;
  Kind kind = Kind::with_direct_reflection;

  void validate() const;
};

/// Measurement-chain description used for gain/delay correction. Per-site
/// complex gains are sampled at each site's lab frequency; gains default to 1
/// when the vectors are empty.
struct ChannelModel {
  std::vector<double> omega_lab;   ///< lab-frame carrier per site (rad/s)
  std::vector<Complex> g_out;      ///< output-chain gain per site
  std::vector<Complex> g_in;       ///< input-chain gain per site
  std::vector<Complex> g_mm;       ///< lumped per-site round-trip gains
  double t_out = 0.0;              ///< uniform output propagation delay (s)

  Complex out_gain(int index) const;
  Complex in_gain(int index) const;
  double lab_frequency(int index) const;
};

/// Steady-state matrix S = I + i sqrt(kappa_e) (H - i kappa/2 - w)^-1 sqrt(kappa_e).
/// Throws NumericalError with the pole location when the resolvent is singular
/// to working precision (possible only for lossless real eigenvalues).
ScatteringResult steady_state_s(const lattice::LatticeModel& model,
                                const std::vector<double>& omega_grid);

/// Transient matrix i sqrt(kappa_e) (H - i kappa/2 - w)^-1 sqrt(kappa_e);
/// equal to the steady-state matrix minus the identity. Columns are read
/// against initial states normalized as (sqrt(kappa_e))^-1 beta(0+).
ScatteringResult transient_s(const lattice::LatticeModel& model,
                             const std::vector<double>& omega_grid);

/// Transient column for initial excitation of one site, computed from a time
/// trace: evolve the impulse-prepared state, step-filter t > 0 and Fourier
/// transform with Simpson quadrature over [0, t_window]. Converges to the
/// resolvent column as the window grows.
/// Returns column vectors per grid frequency.
std::vector<ComplexVector> transient_spectrum_from_trace(
    const lattice::LatticeModel& model, int initial_site,
    const std::vector<double>& omega_grid, double t_window, double dt = 1e-9);

/// Initial state prepared by a flat-top resonant impulse of duration tau on
/// one site: beta(tau) = tau * phi1(-i H tau) sqrt(kappa_e) b_in u_site.
/// tau must exceed one modulation period for the spectrum to stay on-site.
ComplexVector prepare_impulse_state(const lattice::LatticeModel& model, int site,
                                    Complex b_in, double tau = 8e-9);

/// Recovers kappa_e from the principal-value integral of a diagonal transient
/// reflection spectrum over a symmetric window: -Re (integral S_mm dw) / pi.
/// Requires a uniform grid spanning at least ~50 linewidths; throws
/// NumericalError when the estimated truncation tail exceeds tail_tol of the
/// integral.
double kappa_e_from_integral(const std::vector<Complex>& s_diag,
                             const std::vector<double>& omega_grid,
                             double tail_tol = 0.05);

struct GainNormalization {
  ChannelModel channel;                 ///< g_mm filled per site
  std::vector<ComplexMatrix> normalized;  ///< diagonal v/G; off-diagonal symmetrized magnitude
};

/// Per-site lumped gains G_mm from the diagonal spectra and their configured
/// kappa_e, plus reciprocity-symmetrized normalized spectra
/// |sqrt(v_mn v_nm / (G_mm G_nn))|.
GainNormalization normalize_gains(const std::vector<ComplexMatrix>& raw_spectra,
                                  const std::vector<double>& omega_grid,
                                  const std::vector<double>& kappa_e);

/// Symmetric frequency grid of n points spanning [center - half_span, center + half_span].
std::vector<double> make_omega_grid(double center, double half_span, int n_points);

}  // namespace synthlat::scattering
