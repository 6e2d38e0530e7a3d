#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "synthlat/common.hpp"
#include "synthlat/device.hpp"

namespace synthlat::lattice {

/// Rotating-frame effective model: on-site detunings, loss rates and the
/// coupling arrays per hop distance. Site labels are relative to the mode the
/// rotating frame is anchored on; that mode sits at array index origin_index
/// and has absolute mode number n_abs_offset.
struct LatticeModel {
  int n_sites = 0;
  int n_abs_offset = 0;
  int origin_index = 0;
  std::vector<double> delta;     ///< on-site detunings Delta_m (rad/s)
  std::vector<double> kappa_e;   ///< external loss (rad/s)
  std::vector<double> kappa_i;   ///< internal loss (rad/s)
  std::map<int, std::vector<Complex>> couplings;  ///< hop k -> J_{m,m+k}, length n_sites-k

  static LatticeModel uniform_chain(int n_sites, Complex j, double kappa_e = 0.0,
                                    double kappa_i = 0.0);

  double kappa_total(int m) const { return kappa_e[m] + kappa_i[m]; }
  int site_to_index(int site) const;     ///< relative site label -> array index
  int index_to_site(int index) const;    ///< array index -> relative site label
  bool has_even_coupling() const;        ///< any nonzero even-hop coupling present

  void validate() const;
};

struct BarrierSite {
  int site = 0;            ///< relative site label
  double delta = 0.0;      ///< added detuning (rad/s)
  double kappa_extra = 0.0;///< added internal loss (rad/s)
};

/// Seeded Gaussian on-site disorder plus explicit barrier-site overrides.
struct DisorderSpec {
  std::uint64_t seed = 0;
  double delta_sigma = 0.0;    ///< std dev of Gaussian detuning draws (rad/s)
  double kappa_spread = 0.0;   ///< fractional spread of internal loss
  std::vector<BarrierSite> barriers;
};

/// Dense effective Hamiltonian with H[m][m] = Delta_m - i kappa_m / 2,
/// H[m][m+k] = J_{m,m+k} and H[m+k][m] = conj(J_{m,m+k}).
ComplexMatrix build_hamiltonian(const LatticeModel& model);

/// Adds a linear on-site gradient Delta_n += n * detuning (n = relative site).
LatticeModel bloch_ladder(const LatticeModel& model, double detuning);

/// Applies seeded disorder draws and barrier overrides.
LatticeModel with_disorder(const LatticeModel& model, const DisorderSpec& spec);

/// Multiplies every hop-k coupling by exp(i k phase); a fundamental-phase
/// offset of pi flips the sign of all odd-distance couplings.
LatticeModel with_modulation_phase(const LatticeModel& model, double phase);

struct FromDeviceOptions {
  bool include_static_shift = false;  ///< add 2 D_0 phi^2 to the detunings
};

/// Composes device outputs into the rotating-frame model on the window of
/// absolute modes [center_mode - sites_below, center_mode + sites_above]:
/// Delta_m = omega_m - (omega_0 + m * omega_mod), couplings from the drive
/// coefficients, loss arrays supplied by the caller (scalar broadcast allowed).
LatticeModel from_device(const device::ModeSpectrum& spectrum,
                         const std::vector<device::DriveCoefficient>& coeffs,
                         int center_mode, int sites_below, int sites_above,
                         double omega_mod, const std::vector<double>& kappa_e,
                         const std::vector<double>& kappa_i,
                         const FromDeviceOptions& options = {});

}  // namespace synthlat::lattice
