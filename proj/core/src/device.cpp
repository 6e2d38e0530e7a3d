#include "synthlat/device.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "synthlat/constants.hpp"

namespace synthlat::device {

namespace {

double sq(double x) { return x * x; }

/// sqrt(cos^2 f + d2 * sin^2 f), the flux shape of the effective Josephson energy.
double flux_shape(double f, double d2) {
  const double c = std::cos(f);
  const double s = std::sin(f);
  return std::sqrt(c * c + d2 * s * s);
}

/// Distance of f from the nearest tangent pole f = pi/2 + m*pi.
double distance_to_pole(double f) {
  double u = std::fmod(std::abs(f), kPi);
  return std::abs(u - kPi / 2.0);
}

}  // namespace

DeviceParams DeviceParams::make(double omega_rt, double a_ratio, double b_ratio,
                                double z0, int n_squid,
                                std::optional<double> omega_plasma,
                                std::optional<double> phi_zp_scale) {
  DeviceParams p;
  p.omega_rt = omega_rt;
  p.a_ratio = a_ratio;
  p.b_ratio = b_ratio;
  p.z0 = z0;
  p.n_squid = n_squid;
  p.omega_plasma = omega_plasma.value_or(omega_rt * std::sqrt(a_ratio * b_ratio) / kPi);
  p.phi_zp_scale = phi_zp_scale.value_or(default_phase_scale(z0));
  p.validate();
  return p;
}

void DeviceParams::validate() const {
  if (!(omega_rt > 0.0)) throw ConfigError("device: omega_rt must be positive");
  if (!(a_ratio > 0.0)) throw ConfigError("device: inductance ratio A must be positive");
  if (!(b_ratio > 0.0)) throw ConfigError("device: capacitance ratio B must be positive");
  if (!(z0 > 0.0)) throw ConfigError("device: wave impedance Z0 must be positive");
  if (n_squid < 1) throw ConfigError("device: n_squid must be >= 1");
  const double derived = omega_rt * std::sqrt(a_ratio * b_ratio) / kPi;
  if (std::abs(omega_plasma - derived) > 1e-12 * derived) {
    throw ConfigError("device: omega_plasma inconsistent with omega_rt*sqrt(A*B)/pi");
  }
  if (!(phi_zp_scale > 0.0)) throw ConfigError("device: phi_zp_scale must be positive");
}

SquidArray SquidArray::uniform(int n, double lj0_each, double asymmetry) {
  SquidArray a;
  a.lj0.assign(static_cast<size_t>(n), lj0_each);
  a.d_n.assign(static_cast<size_t>(n), asymmetry);
  a.eta0.assign(static_cast<size_t>(n), 0.0);
  a.validate();
  return a;
}

void SquidArray::validate() const {
  if (lj0.empty()) throw ConfigError("squid array: empty");
  if (d_n.size() != lj0.size()) throw ConfigError("squid array: d_n size mismatch");
  if (!eta0.empty() && eta0.size() != lj0.size()) {
    throw ConfigError("squid array: eta0 size mismatch");
  }
  for (double l : lj0) {
    if (!(l > 0.0)) throw ConfigError("squid array: lj0 must be positive");
  }
  for (double d : d_n) {
    if (!(std::abs(d) < 1.0)) throw ConfigError("squid array: |d_n| must be < 1");
  }
}

double SquidArray::total_lj0() const {
  return std::accumulate(lj0.begin(), lj0.end(), 0.0);
}

double SquidArray::mean_lj0() const { return total_lj0() / size(); }

double SquidArray::d_sq2() const {
  // <z_n(0) d_n^2> with z_n(0) = lj0_n / sum lj0 (minimum-inductance divider).
  double acc = 0.0;
  for (int n = 0; n < size(); ++n) acc += lj0[n] * sq(d_n[n]);
  return acc / total_lj0();
}

double FluxDrive::total_ac_amplitude() const {
  double acc = 0.0;
  for (const auto& h : harmonics) acc += std::abs(h.amplitude);
  return acc;
}

double FluxDrive::evaluate(double t) const {
  double f = f_dc;
  for (const auto& h : harmonics) {
    f += h.amplitude * std::cos(h.k * omega_mod * t + h.phase);
  }
  return f;
}

void FluxDrive::validate(double margin) const {
  for (const auto& h : harmonics) {
    if (h.k < 1) throw ConfigError("flux drive: harmonic index must be >= 1");
  }
  if (!harmonics.empty() && !(omega_mod > 0.0)) {
    throw ConfigError("flux drive: omega_mod must be positive when modulating");
  }
  const double swing = total_ac_amplitude();
  if (!(swing < kPi / 4.0)) {
    throw ConfigError("flux drive: total AC amplitude must stay below pi/4");
  }
  if (distance_to_pole(f_dc) - swing < margin) {
    throw ConfigError("flux drive: flux excursion within margin of the half-flux pole");
  }
}

int ModeSpectrum::find(int n) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), n);
  if (it == indices.end() || *it != n) {
    throw ConfigError("mode spectrum: mode " + std::to_string(n) + " not solved");
  }
  return static_cast<int>(it - indices.begin());
}

double a_tilde(const DeviceParams& params, const SquidArray& squids, double f_dc) {
  return params.a_ratio * flux_shape(f_dc, squids.d_sq2());
}

namespace {

/// Mode-condition mismatch g(u) = tan(u) + y/B - A~/y at y = n*pi + u,
/// monotone increasing in u across the full branch (-pi/2, pi/2).
struct BranchEquation {
  int n;
  double a_t;
  double b;

  double operator()(double u) const {
    const double y = n * kPi + u;
    return std::tan(u) + y / b - a_t / y;
  }
  double derivative(double u) const {
    const double y = n * kPi + u;
    const double t = std::tan(u);
    return 1.0 + t * t + 1.0 / b + a_t / (y * y);
  }
};

}  // namespace

double solve_mode_y(int n, double a_t, double b) {
  if (n < 0 || !(a_t >= 0.0) || !(b > 0.0)) {
    throw ConfigError("mode solver: need n >= 0, a_tilde >= 0 and B > 0");
  }
  const BranchEquation eq{n, a_t, b};

  // Inductive termination keeps the root above n*pi; past the crossover
  // (n*pi)^2 > A~*B it continues smoothly onto the lower half-branch. The
  // reflection phase spans (-pi, pi), so the full branch is (n*pi -/+ pi/2);
  // n = 0 is restricted to positive frequency.
  const double edge = kPi / 2.0 * (1.0 - 1e-12);
  double lo = n == 0 ? 1e-12 : -edge;
  double hi = edge;
  if (n == 0) {
    double g_lo = eq(lo);
    while (g_lo > 0.0 && lo > 1e-300) {
      lo *= 0.5;
      g_lo = eq(lo);
    }
    if (g_lo > 0.0) {
      throw NumericalError("mode solver: no positive-frequency root on branch n=0");
    }
    if (g_lo == 0.0) return lo;
  } else if (eq(0.0) == 0.0) {
    return n * kPi;  // shorted-termination limit lands exactly on n*pi
  }
  if (eq(lo) > 0.0 || eq(hi) < 0.0) {
    throw NumericalError("mode solver: bracketing failed on branch n=" + std::to_string(n));
  }

  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (eq(mid) < 0.0 ? lo : hi) = mid;
  }
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    const double step = eq(u) / eq.derivative(u);
    const double next = u - step;
    if (std::abs(next) >= kPi / 2.0 || (n == 0 && next <= 0.0)) break;
    u = next;
    if (std::abs(step) < 1e-16) break;
  }
  return n * kPi + u;
}

namespace {

double phi_zp_from_y(const DeviceParams& params, double y, double a_t) {
  const double c = std::cos(y);
  const double denom = y + (a_t / y + y / params.b_ratio) * c * c;
  return params.phi_zp_scale * c / std::sqrt(denom);
}

}  // namespace

ModeSpectrum solve_mode_frequencies(const DeviceParams& params, const SquidArray& squids,
                                    double f_dc, int n_lo, int n_hi) {
  params.validate();
  squids.validate();
  if (n_hi < n_lo) throw ConfigError("mode solver: empty mode range");
  if (n_lo < 0) throw ConfigError("mode solver: mode numbers must be non-negative");

  const double a_t = a_tilde(params, squids, f_dc);
  ModeSpectrum spec;
  for (int n = n_lo; n <= n_hi; ++n) {
    const double y = solve_mode_y(n, a_t, params.b_ratio);
    spec.indices.push_back(n);
    spec.y.push_back(y);
    spec.omega.push_back(y * params.omega_rt / kPi);
    spec.phi_zp.push_back(phi_zp_from_y(params, y, a_t));
  }
  return spec;
}

double tuning_curve(const DeviceParams& params, const SquidArray& squids,
                    const TuningCalibration& calib, int n, double v) {
  if (!std::isfinite(v)) throw ConfigError("tuning curve: voltage must be finite");
  const double f = calib.g_volt * (v - calib.v_ss);
  return solve_mode_frequencies(params, squids, f, n, n).omega.front();
}

double zero_point_phase(const DeviceParams& params, const SquidArray& squids,
                        double f_dc, int n) {
  return solve_mode_frequencies(params, squids, f_dc, n, n).phi_zp.front();
}

double effective_ej(const SquidArray& squids, double f, EjModel model, EnergyUnit unit) {
  squids.validate();
  const double phi0_sq = sq(kReducedFluxQuantum);
  double e_j = 0.0;
  switch (model) {
    case EjModel::full_sum: {
      double inv_sum = 0.0;
      for (int n = 0; n < squids.size(); ++n) {
        const double shape = flux_shape(f, sq(squids.d_n[n]));
        if (shape < 1e-9) {
          throw NumericalError("effective_ej: pole at half flux for a symmetric SQUID");
        }
        inv_sum += squids.lj0[n] / (phi0_sq * shape);
      }
      e_j = 1.0 / inv_sum;
      break;
    }
    case EjModel::single_squid: {
      if (distance_to_pole(f) < 1e-3) {
        throw NumericalError("effective_ej: single-SQUID expansion invalid at half flux");
      }
      e_j = phi0_sq / squids.total_lj0() * flux_shape(f, squids.d_sq2());
      break;
    }
  }
  return unit == EnergyUnit::joule ? e_j : e_j / kHbar;
}

VoltageDivider voltage_divider(const SquidArray& squids, double f) {
  squids.validate();
  const int n = squids.size();
  VoltageDivider div;
  div.z.resize(n);
  div.x.resize(n);

  // L_I,n = phi0 / (E_Jn cos(eta_n)); the common phi0^2 factor cancels in z_n.
  std::vector<double> l_i(n), tan_eta(n);
  for (int i = 0; i < n; ++i) {
    const double eta0 = squids.eta0.empty() ? 0.0 : squids.eta0[i];
    const double eta = std::atan(squids.d_n[i] * std::tan(f)) + eta0;
    const double ej = flux_shape(f, sq(squids.d_n[i])) / squids.lj0[i];
    l_i[i] = 1.0 / (ej * std::cos(eta));
    tan_eta[i] = std::tan(eta);
  }
  const double l_total = std::accumulate(l_i.begin(), l_i.end(), 0.0);
  const double tan_sum = std::accumulate(tan_eta.begin(), tan_eta.end(), 0.0);
  for (int i = 0; i < n; ++i) {
    div.z[i] = l_i[i] / l_total;
    div.x[i] = tan_eta[i] - div.z[i] * tan_sum;
  }
  return div;
}

std::vector<DriveCoefficient> derive_drive_coefficients(const SquidArray& squids,
                                                        const FluxDrive& drive,
                                                        int k_max) {
  drive.validate();
  if (k_max < 0) throw ConfigError("drive coefficients: k_max must be >= 0");

  const double d2 = squids.d_sq2();
  const double ej0 = sq(kReducedFluxQuantum) / squids.total_lj0() / kHbar;  // rad/s
  const double ej_dc = ej0 * flux_shape(drive.f_dc, d2);

  // D(t) is smooth and periodic, so the trapezoid rule converges spectrally;
  // doubling the grid acts as the convergence check.
  auto fourier = [&](int n_grid) {
    std::vector<Complex> coeffs(static_cast<size_t>(k_max) + 1, Complex(0.0, 0.0));
    for (int i = 0; i < n_grid; ++i) {
      const double tau = kTwoPi * i / n_grid;  // tau = omega_mod * t
      double f = drive.f_dc;
      for (const auto& h : drive.harmonics) f += h.amplitude * std::cos(h.k * tau + h.phase);
      const double d_t = 0.5 * (ej0 * flux_shape(f, d2) - ej_dc);
      for (int k = 0; k <= k_max; ++k) {
        coeffs[k] += d_t * Complex(std::cos(k * tau), std::sin(k * tau));
      }
    }
    for (int k = 0; k <= k_max; ++k) coeffs[k] *= (k == 0 ? 1.0 : 2.0) / double(n_grid);
    return coeffs;
  };

  const auto coarse = fourier(2048);
  const auto fine = fourier(4096);
  double residual = 0.0;
  for (int k = 0; k <= k_max; ++k) residual = std::max(residual, std::abs(fine[k] - coarse[k]));
  const double scale = std::max(1.0, std::abs(fine[0]));
  if (residual > 1e-9 * scale) {
    throw NumericalError("drive coefficients: quadrature residual " + std::to_string(residual) +
                         " rad/s exceeds tolerance");
  }

  std::vector<DriveCoefficient> out(static_cast<size_t>(k_max) + 1);
  out[0] = {fine[0].real(), 0.0};  // mean value, signed
  for (int k = 1; k <= k_max; ++k) {
    // a_k cos + b_k sin with a_k = Re, b_k = Im of the quadrature sum; fold
    // into D_k cos(k tau + theta_k) with D_k >= 0.
    const double a = fine[k].real();
    const double b = fine[k].imag();
    const double mag = std::hypot(a, b);
    out[k] = {mag, mag > 0.0 ? std::atan2(-b, a) : 0.0};
  }
  return out;
}

std::vector<Complex> coupling_rates(const ModeSpectrum& spectrum,
                                    const std::vector<DriveCoefficient>& coeffs,
                                    int k) {
  if (k < 1) throw ConfigError("coupling rates: hop distance must be >= 1");
  if (static_cast<int>(coeffs.size()) <= k) {
    throw ConfigError("coupling rates: drive coefficients not computed through k");
  }
  const int n_modes = static_cast<int>(spectrum.indices.size());
  std::vector<Complex> j;
  j.reserve(std::max(0, n_modes - k));
  const Complex phase = std::polar(1.0, coeffs[k].phase);
  for (int m = 0; m + k < n_modes; ++m) {
    j.push_back(coeffs[k].amplitude * spectrum.phi_zp[m] * spectrum.phi_zp[m + k] * phase);
  }
  return j;
}

std::vector<double> onsite_modulation_shift(const ModeSpectrum& spectrum, double d0) {
  std::vector<double> shift;
  shift.reserve(spectrum.phi_zp.size());
  for (double p : spectrum.phi_zp) shift.push_back(2.0 * d0 * p * p);
  return shift;
}

double bessel_j1(double x) {
  // J1(x) = (x/2) sum_m (-(x/2)^2)^m / (m! (m+1)!); converges fast for |x| <= 8.
  const double half = 0.5 * x;
  const double msq = -half * half;
  double term = half;
  double sum = term;
  for (int m = 1; m <= 40; ++m) {
    term *= msq / (static_cast<double>(m) * (m + 1));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

double nearest_neighbor_coupling_closed_form(const SquidArray& squids, double f_dc,
                                             double delta_f, double phi_m,
                                             double phi_m1) {
  const double ej0 = sq(kReducedFluxQuantum) / squids.total_lj0() / kHbar;
  return std::abs(ej0 * phi_m * phi_m1 * std::sin(f_dc) * bessel_j1(delta_f));
}

}  // namespace synthlat::device
