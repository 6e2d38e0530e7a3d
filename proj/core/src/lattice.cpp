#include "synthlat/lattice.hpp"

#include <cmath>
#include <random>

namespace synthlat::lattice {

LatticeModel LatticeModel::uniform_chain(int n_sites, Complex j, double kappa_e,
                                         double kappa_i) {
  LatticeModel m;
  m.n_sites = n_sites;
  m.n_abs_offset = 0;
  m.delta.assign(static_cast<size_t>(n_sites), 0.0);
  m.kappa_e.assign(static_cast<size_t>(n_sites), kappa_e);
  m.kappa_i.assign(static_cast<size_t>(n_sites), kappa_i);
  if (n_sites > 1 && j != Complex(0.0, 0.0)) {
    m.couplings[1] = std::vector<Complex>(static_cast<size_t>(n_sites - 1), j);
  }
  m.validate();
  return m;
}

int LatticeModel::site_to_index(int site) const {
  const int idx = site + origin_index;
  if (idx < 0 || idx >= n_sites) {
    throw ConfigError("lattice: site " + std::to_string(site) + " outside model");
  }
  return idx;
}

int LatticeModel::index_to_site(int index) const { return index - origin_index; }

bool LatticeModel::has_even_coupling() const {
  for (const auto& [k, arr] : couplings) {
    if (k % 2 != 0) continue;
    for (const auto& j : arr) {
      if (std::abs(j) > 0.0) return true;
    }
  }
  return false;
}

void LatticeModel::validate() const {
  if (n_sites < 1) throw ConfigError("lattice: n_sites must be >= 1");
  if (origin_index < 0 || origin_index >= n_sites) {
    throw ConfigError("lattice: origin_index outside model");
  }
  const auto n = static_cast<size_t>(n_sites);
  if (delta.size() != n || kappa_e.size() != n || kappa_i.size() != n) {
    throw ConfigError("lattice: per-site array size mismatch");
  }
  for (size_t i = 0; i < n; ++i) {
    if (kappa_e[i] < 0.0 || kappa_i[i] < 0.0) {
      throw ConfigError("lattice: loss rates must be non-negative");
    }
  }
  for (const auto& [k, arr] : couplings) {
    if (k < 1 || k >= n_sites) throw ConfigError("lattice: invalid hop distance");
    if (arr.size() != static_cast<size_t>(n_sites - k)) {
      throw ConfigError("lattice: coupling array for hop " + std::to_string(k) +
                        " must have length n_sites - k");
    }
  }
}

ComplexMatrix build_hamiltonian(const LatticeModel& model) {
  model.validate();
  const int n = model.n_sites;
  ComplexMatrix h = ComplexMatrix::Zero(n, n);
  for (int m = 0; m < n; ++m) {
    h(m, m) = Complex(model.delta[m], -0.5 * model.kappa_total(m));
  }
  for (const auto& [k, arr] : model.couplings) {
    for (int m = 0; m + k < n; ++m) {
      h(m, m + k) = arr[m];
      h(m + k, m) = std::conj(arr[m]);
    }
  }
  return h;
}

LatticeModel bloch_ladder(const LatticeModel& model, double detuning) {
  LatticeModel out = model;
  for (int i = 0; i < out.n_sites; ++i) {
    out.delta[i] += static_cast<double>(out.index_to_site(i)) * detuning;
  }
  return out;
}

LatticeModel with_disorder(const LatticeModel& model, const DisorderSpec& spec) {
  LatticeModel out = model;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (spec.delta_sigma > 0.0) {
    for (auto& d : out.delta) d += spec.delta_sigma * gauss(rng);
  }
  if (spec.kappa_spread > 0.0) {
    for (auto& k : out.kappa_i) {
      k = std::max(0.0, k * (1.0 + spec.kappa_spread * gauss(rng)));
    }
  }
  for (const auto& b : spec.barriers) {
    const int idx = out.site_to_index(b.site);
    out.delta[idx] += b.delta;
    out.kappa_i[idx] += b.kappa_extra;
  }
  return out;
}

LatticeModel with_modulation_phase(const LatticeModel& model, double phase) {
  LatticeModel out = model;
  for (auto& [k, arr] : out.couplings) {
    const Complex factor = std::polar(1.0, k * phase);
    for (auto& j : arr) j *= factor;
  }
  return out;
}

LatticeModel from_device(const device::ModeSpectrum& spectrum,
                         const std::vector<device::DriveCoefficient>& coeffs,
                         int center_mode, int sites_below, int sites_above,
                         double omega_mod, const std::vector<double>& kappa_e,
                         const std::vector<double>& kappa_i,
                         const FromDeviceOptions& options) {
  if (sites_below < 0 || sites_above < 0) {
    throw ConfigError("from_device: window extents must be non-negative");
  }
  const int n_sites = sites_below + sites_above + 1;
  const int first = spectrum.find(center_mode - sites_below);
  const int last = spectrum.find(center_mode + sites_above);
  if (last - first + 1 != n_sites) {
    throw ConfigError("from_device: spectrum does not cover the site window contiguously");
  }

  auto broadcast = [&](const std::vector<double>& v, const char* name) {
    if (v.size() == 1) return std::vector<double>(static_cast<size_t>(n_sites), v[0]);
    if (v.size() != static_cast<size_t>(n_sites)) {
      throw ConfigError(std::string("from_device: ") + name + " must have 1 or n_sites entries");
    }
    return v;
  };

  LatticeModel m;
  m.n_sites = n_sites;
  m.n_abs_offset = center_mode;
  m.origin_index = sites_below;
  m.kappa_e = broadcast(kappa_e, "kappa_e");
  m.kappa_i = broadcast(kappa_i, "kappa_i");

  const double omega0 = spectrum.omega_of(center_mode);
  m.delta.resize(static_cast<size_t>(n_sites));
  for (int i = 0; i < n_sites; ++i) {
    const int rel = i - sites_below;
    m.delta[i] = spectrum.omega[first + i] - (omega0 + rel * omega_mod);
  }

  for (int k = 1; k < static_cast<int>(coeffs.size()) && k < n_sites; ++k) {
    if (coeffs[k].amplitude == 0.0) continue;
    const auto full = device::coupling_rates(spectrum, coeffs, k);
    std::vector<Complex> window(full.begin() + first, full.begin() + first + (n_sites - k));
    m.couplings[k] = std::move(window);
  }

  if (options.include_static_shift) {
    const auto shift = device::onsite_modulation_shift(spectrum, coeffs.at(0).amplitude);
    for (int i = 0; i < n_sites; ++i) m.delta[i] += shift[first + i];
  }

  m.validate();
  return m;
}

}  // namespace synthlat::lattice
