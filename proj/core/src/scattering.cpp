#include "synthlat/scattering.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include "synthlat/dynamics.hpp"
#include "synthlat/parallel.hpp"

namespace synthlat::scattering {

namespace {

RealVector sqrt_kappa_e(const lattice::LatticeModel& model) {
  RealVector k(model.n_sites);
  for (int i = 0; i < model.n_sites; ++i) k[i] = std::sqrt(model.kappa_e[i]);
  return k;
}

/// i sqrt(ke) (H - w I)^-1 sqrt(ke), the shared core of both scattering kinds.
ComplexMatrix resolvent_block(const ComplexMatrix& h, const RealVector& root_ke,
                              double omega) {
  const auto n = h.rows();
  ComplexMatrix shifted = h;
  shifted.diagonal().array() -= Complex(omega, 0.0);
  Eigen::PartialPivLU<ComplexMatrix> lu(shifted);
  const double pivot_min = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (pivot_min < 1e-14 * scale) {
    throw NumericalError("scattering: resolvent near-singular at omega = " +
                         std::to_string(omega) + " rad/s (pole proximity)");
  }
  ComplexMatrix rhs = root_ke.asDiagonal().toDenseMatrix().cast<Complex>();
  ComplexMatrix block = Complex(0.0, 1.0) * lu.solve(rhs);
  for (Eigen::Index r = 0; r < n; ++r) block.row(r) *= root_ke[r];
  return block;
}

}  // namespace

void ScatteringResult::validate() const {
  if (s.size() != omega_grid.size()) throw ConfigError("scattering: tensor shape mismatch");
  for (size_t i = 1; i < omega_grid.size(); ++i) {
    if (!(omega_grid[i] > omega_grid[i - 1])) {
      throw ConfigError("scattering: omega grid must be sorted ascending");
    }
  }
}

Complex ChannelModel::out_gain(int index) const {
  return g_out.empty() ? Complex(1.0, 0.0) : g_out.at(static_cast<size_t>(index));
}

Complex ChannelModel::in_gain(int index) const {
  return g_in.empty() ? Complex(1.0, 0.0) : g_in.at(static_cast<size_t>(index));
}

double ChannelModel::lab_frequency(int index) const {
  return omega_lab.empty() ? 0.0 : omega_lab.at(static_cast<size_t>(index));
}

ScatteringResult steady_state_s(const lattice::LatticeModel& model,
                                const std::vector<double>& omega_grid) {
  model.validate();
  const ComplexMatrix h = lattice::build_hamiltonian(model);
  const RealVector root_ke = sqrt_kappa_e(model);

  ScatteringResult result;
  result.kind = ScatteringResult::Kind::with_direct_reflection;
  result.omega_grid = omega_grid;
  result.s.resize(omega_grid.size());
  parallel_for(static_cast<int>(omega_grid.size()), [&](int f) {
    ComplexMatrix s = resolvent_block(h, root_ke, omega_grid[static_cast<size_t>(f)]);
    s.diagonal().array() += Complex(1.0, 0.0);
    result.s[static_cast<size_t>(f)] = std::move(s);
  });
  result.validate();
  return result;
}

ScatteringResult transient_s(const lattice::LatticeModel& model,
                             const std::vector<double>& omega_grid) {
  model.validate();
  const ComplexMatrix h = lattice::build_hamiltonian(model);
  const RealVector root_ke = sqrt_kappa_e(model);

  ScatteringResult result;
  result.kind = ScatteringResult::Kind::transient;
  result.omega_grid = omega_grid;
  result.s.resize(omega_grid.size());
  parallel_for(static_cast<int>(omega_grid.size()), [&](int f) {
    result.s[static_cast<size_t>(f)] =
        resolvent_block(h, root_ke, omega_grid[static_cast<size_t>(f)]);
  });
  result.validate();
  return result;
}

std::vector<ComplexVector> transient_spectrum_from_trace(
    const lattice::LatticeModel& model, int initial_site,
    const std::vector<double>& omega_grid, double t_window, double dt) {
  model.validate();
  const int n = model.n_sites;
  const int idx = model.site_to_index(initial_site);
  if (model.kappa_e[idx] <= 0.0) {
    throw ConfigError("transient spectrum: zero kappa_e at the initial site");
  }

  // Simpson quadrature needs an even interval count.
  int steps = static_cast<int>(std::llround(t_window / dt));
  if (steps % 2 != 0) ++steps;
  std::vector<double> grid(static_cast<size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) grid[static_cast<size_t>(i)] = i * dt;

  ComplexVector beta0 = ComplexVector::Zero(n);
  beta0[idx] = std::sqrt(model.kappa_e[idx]);  // impulse with b_in = 1
  const auto trace = dynamics::evolve(lattice::build_hamiltonian(model), beta0, grid);

  const RealVector root_ke = sqrt_kappa_e(model);
  std::vector<ComplexVector> columns(omega_grid.size());
  for (size_t f = 0; f < omega_grid.size(); ++f) {
    const double w = omega_grid[f];
    ComplexVector acc = ComplexVector::Zero(n);
    for (int i = 0; i <= steps; ++i) {
      const double weight = (i == 0 || i == steps) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += (weight * std::polar(1.0, w * grid[static_cast<size_t>(i)])) *
             trace.amps.col(i);
    }
    acc *= dt / 3.0;
    // beta_out = -sqrt(kappa_e) beta per site; the input column was prepared
    // with the (sqrt(kappa_e))^-1 beta(0+) normalization (unit b_in).
    columns[f] = (-root_ke.array() * acc.array()).matrix();
  }
  return columns;
}

ComplexVector prepare_impulse_state(const lattice::LatticeModel& model, int site,
                                    Complex b_in, double tau) {
  model.validate();
  if (!(tau > 0.0)) throw ConfigError("impulse preparation: tau must be positive");
  const int n = model.n_sites;
  const int idx = model.site_to_index(site);
  ComplexVector s = ComplexVector::Zero(n);
  s[idx] = std::sqrt(model.kappa_e[idx]) * b_in;

  // One driven step of length tau applied to the vacuum.
  ComplexMatrix aug = ComplexMatrix::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = Complex(0.0, -1.0) * lattice::build_hamiltonian(model);
  aug.topRightCorner(n, 1) = s;
  const ComplexMatrix e = (tau * aug).exp();
  return e.topRightCorner(n, 1);
}

double kappa_e_from_integral(const std::vector<Complex>& s_diag,
                             const std::vector<double>& omega_grid,
                             double tail_tol) {
  if (s_diag.size() != omega_grid.size() || s_diag.size() < 8) {
    throw ConfigError("kappa_e integral: need matching spectra and grid (>= 8 points)");
  }
  const size_t n = omega_grid.size();
  const double dw = omega_grid[1] - omega_grid[0];
  for (size_t i = 1; i < n; ++i) {
    if (std::abs((omega_grid[i] - omega_grid[i - 1]) - dw) > 1e-9 * std::abs(dw)) {
      throw ConfigError("kappa_e integral: grid must be uniform");
    }
  }

  Complex integral(0.0, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double weight = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    integral += weight * s_diag[i];
  }
  integral *= dw;

  // Beyond the window the pair sum S(c+x) + S(c-x) decays as 1/x^2, so the
  // missing tail is approximately W * (S_left + S_right).
  const double half_span = 0.5 * (omega_grid.back() - omega_grid.front());
  const double tail = std::abs(s_diag.front() + s_diag.back()) * half_span;
  const double kappa_e = -integral.real() / kPi;
  if (kappa_e > 0.0 && tail > tail_tol * kPi * kappa_e) {
    throw NumericalError("kappa_e integral: estimated tail " + std::to_string(tail) +
                         " rad/s exceeds tolerance; widen the grid");
  }
  return kappa_e;
}

GainNormalization normalize_gains(const std::vector<ComplexMatrix>& raw_spectra,
                                  const std::vector<double>& omega_grid,
                                  const std::vector<double>& kappa_e) {
  if (raw_spectra.size() != omega_grid.size() || raw_spectra.empty()) {
    throw ConfigError("normalize_gains: spectra/grid mismatch");
  }
  const auto n_sites = raw_spectra.front().rows();
  if (static_cast<size_t>(n_sites) != kappa_e.size()) {
    throw ConfigError("normalize_gains: kappa_e must cover every site");
  }

  GainNormalization result;
  result.channel.g_mm.resize(static_cast<size_t>(n_sites));
  const double dw = omega_grid[1] - omega_grid[0];
  for (Eigen::Index m = 0; m < n_sites; ++m) {
    Complex integral(0.0, 0.0);
    for (size_t f = 0; f < omega_grid.size(); ++f) {
      const double weight = (f == 0 || f + 1 == omega_grid.size()) ? 0.5 : 1.0;
      integral += weight * raw_spectra[f](m, m);
    }
    integral *= dw;
    if (std::abs(integral) == 0.0) {
      throw NumericalError("normalize_gains: vanishing diagonal integral at site " +
                           std::to_string(m));
    }
    result.channel.g_mm[static_cast<size_t>(m)] =
        -integral / (kPi * kappa_e[static_cast<size_t>(m)]);
  }

  result.normalized.reserve(raw_spectra.size());
  for (const auto& v : raw_spectra) {
    ComplexMatrix s(n_sites, n_sites);
    for (Eigen::Index m = 0; m < n_sites; ++m) {
      const Complex gm = result.channel.g_mm[static_cast<size_t>(m)];
      s(m, m) = v(m, m) / gm;
      for (Eigen::Index p = m + 1; p < n_sites; ++p) {
        const Complex gp = result.channel.g_mm[static_cast<size_t>(p)];
        const double sym = std::sqrt(std::abs(v(m, p) * v(p, m) / (gm * gp)));
        s(m, p) = sym;
        s(p, m) = sym;
      }
    }
    result.normalized.push_back(std::move(s));
  }
  return result;
}

std::vector<double> make_omega_grid(double center, double half_span, int n_points) {
  if (n_points < 2) throw ConfigError("omega grid: need at least two points");
  std::vector<double> grid(static_cast<size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    grid[static_cast<size_t>(i)] =
        center - half_span + 2.0 * half_span * i / (n_points - 1);
  }
  return grid;
}

}  // namespace synthlat::scattering
