// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] = path to the synthlat CLI, argv[2] = configs directory
// (both required for the determinism criterion).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "synthlat/analysis.hpp"
#include "synthlat/constants.hpp"
#include "synthlat/device.hpp"
#include "synthlat/dynamics.hpp"
#include "synthlat/io.hpp"
#include "synthlat/lattice.hpp"
#include "synthlat/scattering.hpp"
#include "synthlat/signal_chain.hpp"

namespace fs = std::filesystem;
using namespace synthlat;
using lattice::LatticeModel;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  if (!pass) ++failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// Reference device (flux-tuning table values) shared by several criteria.
device::DeviceParams reference_params() {
  return device::DeviceParams::make(kTwoPi * 155.52e6, 40.11, 4479.0, 50.0, 8);
}
device::SquidArray reference_squids() {
  const auto p = reference_params();
  return device::SquidArray::uniform(8, kPi * p.z0 / (p.omega_rt * p.a_ratio) / 8.0, 0.1);
}
constexpr double kFdc = -3.14159265358979323846 / 4.0;

LatticeModel random_lattice(std::uint64_t seed, int n, bool lossless_internal) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  LatticeModel model = LatticeModel::uniform_chain(n, {0.0, 0.0});
  model.couplings[1].assign(static_cast<size_t>(n - 1), {0.0, 0.0});
  for (int i = 0; i < n; ++i) {
    model.delta[static_cast<size_t>(i)] = kTwoPi * 2e6 * (uni(rng) - 0.5);
    model.kappa_e[static_cast<size_t>(i)] = kTwoPi * (40e3 + 80e3 * uni(rng));
    model.kappa_i[static_cast<size_t>(i)] = lossless_internal ? 0.0 : kTwoPi * 50e3 * uni(rng);
  }
  for (int i = 0; i + 1 < n; ++i) {
    model.couplings[1][static_cast<size_t>(i)] =
        std::polar(kTwoPi * (0.5e6 + 1.5e6 * uni(rng)), kTwoPi * uni(rng));
  }
  return model;
}

std::vector<double> uniform_grid(double t_max, double dt) {
  const int steps = static_cast<int>(std::llround(t_max / dt));
  std::vector<double> g(static_cast<size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) g[static_cast<size_t>(i)] = i * dt;
  return g;
}

std::vector<int> site_labels(const LatticeModel& model) {
  std::vector<int> sites(static_cast<size_t>(model.n_sites));
  for (int i = 0; i < model.n_sites; ++i) sites[static_cast<size_t>(i)] = model.index_to_site(i);
  return sites;
}

double slope_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// --- criteria ------------------------------------------------------------

void criterion_1_mode_solver() {
  const auto params = reference_params();
  const auto squids = reference_squids();
  const auto spec = device::solve_mode_frequencies(params, squids, kFdc, 31, 33);
  const double f32 = spec.omega_of(32) / kTwoPi;
  const double fsr = (spec.omega_of(33) - spec.omega_of(32)) / kTwoPi;

  device::TuningCalibration calib{kPi * 0.0796, 4.481, 4000.0, 0.0};
  double lo = 1e300, hi = 0.0;
  const double period = kPi / calib.g_volt;
  for (int i = 0; i <= 300; ++i) {
    const double v = calib.v_ss - period / 2 + period * i / 300.0;
    const double f = device::tuning_curve(params, squids, calib, 32, v);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  const double range = (hi - lo) / kTwoPi;

  const bool pass = std::abs(f32 - 4.989e9) / 4.989e9 < 0.005 &&
                    std::abs(fsr - 155.1e6) / 155.1e6 < 0.01 && range >= 10e6 &&
                    range <= 25e6;
  report(1, "mode solver vs reference numbers", pass,
         "f32 = " + fmt(f32 / 1e9) + " GHz, FSR = " + fmt(fsr / 1e6) +
             " MHz, tuning range = " + fmt(range / 1e6) + " MHz");
}

void criterion_2_zero_point_structure() {
  const auto spec = device::solve_mode_frequencies(reference_params(), reference_squids(), kFdc, 1, 61);
  int argmax = 0;
  double best = 0.0;
  for (size_t i = 0; i < spec.indices.size(); ++i) {
    if (std::abs(spec.phi_zp[i]) > best) {
      best = std::abs(spec.phi_zp[i]);
      argmax = spec.indices[i];
    }
  }

  std::vector<double> m_vals, j_vals;
  for (size_t i = 0; i + 1 < spec.indices.size(); ++i) {
    const int m = spec.indices[i];
    if (m >= 40 && m <= 60) {
      m_vals.push_back(m);
      j_vals.push_back(std::abs(spec.phi_zp[i] * spec.phi_zp[i + 1]));
    }
  }
  const double slope = slope_loglog(m_vals, j_vals);

  const bool pass = argmax == 9 && std::abs(slope + 1.0) < 0.1;
  report(2, "zero-point maximum at mode 9, 1/m coupling decay", pass,
         "argmax = " + std::to_string(argmax) + ", log-log slope = " + fmt(slope));
}

void criterion_3_coupling_magnitude() {
  device::FluxDrive drive;
  drive.f_dc = kFdc;
  drive.omega_mod = kTwoPi * 155.1e6;
  drive.harmonics = {{1, 0.062 * kPi, 0.0}};
  const auto spec = device::solve_mode_frequencies(reference_params(), reference_squids(), kFdc, 30, 35);
  const auto coeffs = device::derive_drive_coefficients(reference_squids(), drive, 1);
  const auto j = device::coupling_rates(spec, coeffs, 1);
  const double j32 = std::abs(j[static_cast<size_t>(spec.find(32))]) / kTwoPi;
  const bool pass = j32 >= 0.6e6 && j32 <= 2.5e6;
  report(3, "nearest-neighbor coupling at the working point", pass,
         "|J_32,33|/2pi = " + fmt(j32 / 1e6) + " MHz");
}

void criterion_4_scattering_identities() {
  double worst_unitarity = 0.0;
  double worst_identity = 0.0;
  const auto grid = scattering::make_omega_grid(0.0, kTwoPi * 4e6, 21);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto lossless = random_lattice(seed, 8, true);
    const auto steady = scattering::steady_state_s(lossless, grid);
    const auto transient = scattering::transient_s(lossless, grid);
    for (size_t f = 0; f < grid.size(); ++f) {
      const ComplexMatrix defect =
          steady.s[f].adjoint() * steady.s[f] - ComplexMatrix::Identity(8, 8);
      worst_unitarity = std::max(worst_unitarity, defect.cwiseAbs().maxCoeff());
      const ComplexMatrix diff =
          transient.s[f] - (steady.s[f] - ComplexMatrix::Identity(8, 8));
      worst_identity = std::max(worst_identity, diff.cwiseAbs().maxCoeff());
    }
  }

  const auto lossy = random_lattice(424242, 5, false);
  const auto fine_grid = scattering::make_omega_grid(0.0, kTwoPi * 4e6, 161);
  const auto reference = scattering::transient_s(lossy, fine_grid);
  const auto fft_route =
      scattering::transient_spectrum_from_trace(lossy, 2, fine_grid, 100e-6, 1e-9);
  const int column = lossy.site_to_index(2);
  double worst_fft = 0.0;
  for (size_t f = 0; f < fine_grid.size(); ++f) {
    worst_fft = std::max(
        worst_fft, (fft_route[f] - reference.s[f].col(column)).cwiseAbs().maxCoeff());
  }

  const bool pass = worst_unitarity < 1e-9 && worst_identity < 1e-9 && worst_fft < 1e-4;
  report(4, "scattering identities (unitarity, transient = steady - I, FFT route)", pass,
         "max |S'S-I| = " + fmt(worst_unitarity) + ", max |tr-(st-I)| = " +
             fmt(worst_identity) + ", FFT vs resolvent = " + fmt(worst_fft));
}

void criterion_5_kappa_e_integral() {
  const double kappa_e = kTwoPi * 100e3;
  LatticeModel single = LatticeModel::uniform_chain(1, {0.0, 0.0}, kappa_e, 0.0);
  const auto grid = scattering::make_omega_grid(0.0, 50.0 * kappa_e, 4001);
  const auto transient = scattering::transient_s(single, grid);
  std::vector<Complex> diag(grid.size());
  for (size_t f = 0; f < grid.size(); ++f) diag[f] = transient.s[f](0, 0);
  const double isolated = scattering::kappa_e_from_integral(diag, grid);
  const double err_isolated = std::abs(isolated - kappa_e) / kappa_e;

  LatticeModel pair = LatticeModel::uniform_chain(2, Complex(-kTwoPi * 0.3e6, 0.0));
  pair.kappa_e = {kTwoPi * 80e3, kTwoPi * 120e3};
  pair.kappa_i = {kTwoPi * 10e3, kTwoPi * 10e3};
  const auto wide = scattering::make_omega_grid(0.0, kTwoPi * 12e6, 8001);
  const auto t2 = scattering::transient_s(pair, wide);
  double err_pair = 0.0;
  for (int m = 0; m < 2; ++m) {
    std::vector<Complex> d(wide.size());
    for (size_t f = 0; f < wide.size(); ++f) d[f] = t2.s[f](m, m);
    const double rec = scattering::kappa_e_from_integral(d, wide);
    err_pair = std::max(err_pair, std::abs(rec - pair.kappa_e[static_cast<size_t>(m)]) /
                                      pair.kappa_e[static_cast<size_t>(m)]);
  }

  const bool pass = err_isolated < 0.02 && err_pair < 0.05;
  report(5, "kappa_e recovered from the reflection integral", pass,
         "isolated error = " + fmt(100 * err_isolated) + "%, overlapping = " +
             fmt(100 * err_pair) + "%");
}

void criterion_6_bloch_oscillations() {
  const double detuning = kTwoPi * 3e6;
  const double t_b = dynamics::bloch_period(detuning);
  auto model = LatticeModel::uniform_chain(61, Complex(kTwoPi * 1.25e6, 0.0));
  model.origin_index = 30;

  // Directional packet makes the centroid itself orbit at the Bloch period.
  analysis::WavepacketSpec spec;
  spec.sigma = 2.0;
  spec.k_eff = 0.5 * kPi;
  spec.n_sites = 5;
  const auto packet = analysis::make_wavepacket(spec, site_labels(model));
  const auto orbit = dynamics::bloch_oscillate(model, detuning, packet, 1.4 * t_b, 1e-9);
  const auto centroid = dynamics::centroid_trajectory(orbit);

  double excursion = 0.0;
  for (double c : centroid) excursion = std::max(excursion, std::abs(c - centroid[0]));

  double best_return = 1e300;
  double t_return = 0.0;
  for (size_t i = 0; i < centroid.size(); ++i) {
    const double t = orbit.times[i];
    if (t < 0.7 * t_b || t > 1.3 * t_b) continue;
    const double dev = std::abs(centroid[i] - centroid[0]);
    if (dev < best_return) {
      best_return = dev;
      t_return = t;
    }
  }

  // Single-site start on the same lattice revives with high fidelity.
  ComplexVector delta0 = ComplexVector::Zero(61);
  delta0[30] = 1.0;
  const auto revival = dynamics::bloch_oscillate(model, detuning, delta0, t_b, 1e-9);
  const double fidelity =
      dynamics::overlap_fidelity(delta0, revival.amps.col(revival.amps.cols() - 1));

  const bool pass = excursion > 0.5 && std::abs(t_return - t_b) / t_b < 0.03 &&
                    fidelity > 0.99;
  report(6, "Bloch oscillation period and disorder-free revival", pass,
         "T_return = " + fmt(t_return * 1e9) + " ns (T_B = " + fmt(t_b * 1e9) +
             " ns), fidelity = " + fmt(fidelity));
}

void criterion_7_group_velocity() {
  auto model = LatticeModel::uniform_chain(61, Complex(kTwoPi * 0.625e6, 0.0));
  model.origin_index = 30;
  analysis::WavepacketSpec spec;
  spec.sigma = 2.5;
  spec.k_eff = 0.5 * kPi;
  spec.n_sites = 11;
  const auto beta0 = analysis::make_wavepacket(spec, site_labels(model));
  const auto trace = dynamics::evolve(model, beta0, uniform_grid(2.4e-6, 2e-9));
  const auto fit = analysis::group_velocity(trace, spec.sigma);
  const double err_single = std::abs(fit.v_g - (-7.85e6)) / 7.85e6;

  auto sweep_model = LatticeModel::uniform_chain(81, Complex(kTwoPi * 1.0e6, 0.0));
  sweep_model.origin_index = 40;
  const double two_j = 2.0 * kTwoPi * 1.0e6;
  double sum_sq = 0.0;
  int count = 0;
  for (int q = -7; q <= 7; ++q) {
    analysis::WavepacketSpec s;
    s.sigma = 3.0;
    s.k_eff = q * 0.125 * kPi;
    s.n_sites = 19;
    const auto b0 = analysis::make_wavepacket(s, site_labels(sweep_model));
    const auto tr = dynamics::evolve(sweep_model, b0, uniform_grid(1.4e-6, 2e-9));
    const auto f = analysis::group_velocity(tr, s.sigma);
    const double expected = -two_j * std::sin(s.k_eff);
    sum_sq += (f.v_g - expected) * (f.v_g - expected);
    ++count;
  }
  const double rms = std::sqrt(sum_sq / count) / two_j;

  const bool pass = err_single < 0.10 && rms < 0.05;
  report(7, "wavepacket group velocity", pass,
         "v_g = " + fmt(fit.v_g / 1e6) + " sites/us (target -7.85, err " +
             fmt(100 * err_single) + "%), sweep RMS = " + fmt(100 * rms) + "% of 2|J|");
}

void criterion_8_dispersion_pipeline() {
  const double j_hz = 1.25e6;
  auto model = LatticeModel::uniform_chain(41, Complex(kTwoPi * j_hz, 0.0), kTwoPi * 60e3,
                                           kTwoPi * 100e3);
  model.origin_index = 20;
  ComplexVector beta0 = ComplexVector::Zero(41);
  beta0[20] = 1.0;
  const auto trace = dynamics::evolve(model, beta0, uniform_grid(16e-6, 2e-9));

  signal_chain::JitterModel jitter;
  jitter.seed = 99;
  jitter.theta_rand = kPi;  // fully random LO phase per raster shot
  jitter.drift_rad_per_s = 1e3;
  jitter.shot_interval = 0.1;

  const auto measured = signal_chain::apply_channel(trace, model, {}, jitter);
  const auto reference = signal_chain::jitter_reference(measured, jitter);
  const auto corrected = signal_chain::phase_reference_correct(measured, reference);

  const auto fit_corrected = analysis::extract_dispersion(corrected, model, {});
  const auto fit_raw = analysis::extract_dispersion(measured, model, {});

  const double err = std::abs(fit_corrected.fit.j_mag / kTwoPi - j_hz) / j_hz;

  // Power along the recovered ridge: with uncorrected phases the coherent sum
  // over sites collapses to the incoherent floor.
  double line_corrected = 0.0, line_raw = 0.0;
  for (size_t q = 0; q < fit_corrected.ridge.size(); ++q) {
    const double w = fit_corrected.ridge[q].second;
    const auto& wg = fit_corrected.omega_grid;
    size_t bin = 0;
    double best = 1e300;
    for (size_t f = 0; f < wg.size(); ++f) {
      if (std::abs(wg[f] - w) < best) {
        best = std::abs(wg[f] - w);
        bin = f;
      }
    }
    line_corrected += fit_corrected.power(static_cast<Eigen::Index>(q),
                                          static_cast<Eigen::Index>(bin));
    line_raw += fit_raw.power(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(bin));
  }
  const double power_ratio = line_corrected / std::max(line_raw, 1e-300);

  const bool pass = err < 0.03 && power_ratio >= 10.0;
  report(8, "jitter -> reference correction -> dispersion fit", pass,
         "|J_fit| err = " + fmt(100 * err) + "%, corrected/raw ridge power = " +
             fmt(power_ratio) + "x");
}

void criterion_9_band_model_fits() {
  const double j2 = kTwoPi * 2.04e6, j4 = kTwoPi * 0.835e6;
  std::vector<std::pair<double, double>> ridge;
  for (int i = 0; i < 27; ++i) {
    const double k = -kPi + kTwoPi * i / 27.0;
    ridge.emplace_back(k, 2 * j2 * std::cos(2 * k) + 2 * j4 * std::cos(4 * k));
  }
  const auto h2 = analysis::fit_band_models(ridge, analysis::BandModel::second_nn_h2);
  const double err_j2 = std::abs(h2.coefficients[0] - j2) / j2;
  const double err_j4 = std::abs(h2.coefficients[1] - j4) / j4;

  const double j1t = kTwoPi * 0.659e6, j2t = kTwoPi * 1.71e6, j4t = kTwoPi * 0.399e6;
  const double theta2 = -0.08 * kPi;
  std::vector<std::pair<double, double>> asym;
  for (int i = 0; i < 41; ++i) {
    const double k = -kPi + kTwoPi * i / 41.0;
    asym.emplace_back(k, 2 * j1t * std::cos(k) + 2 * j2t * std::cos(2 * k + theta2) +
                             2 * j4t * std::cos(4 * k + 2 * theta2));
  }
  const auto tt = analysis::fit_band_models(asym, analysis::BandModel::two_tone);
  const double err_theta = std::abs(std::remainder(tt.theta2 - theta2, kTwoPi));

  const bool pass = err_j2 < 0.02 && err_j4 < 0.02 && err_theta < 0.02 * kPi;
  report(9, "second-neighbor and two-tone band fits", pass,
         "|J2| err = " + fmt(100 * err_j2) + "%, |J4| err = " + fmt(100 * err_j4) +
             "%, theta2 err = " + fmt(err_theta / kPi) + " pi");
}

void criterion_10_defect_scattering() {
  const Complex j(kTwoPi * 1.0e6, 0.0);
  double worst_identity = 0.0;
  for (double delta_over_j : {0.3, 1.0, 2.7}) {
    for (double k : {0.2 * kPi, 0.5 * kPi, 0.8 * kPi}) {
      const auto r = analysis::defect_scattering(delta_over_j * std::abs(j), j, k);
      worst_identity = std::max(
          worst_identity, std::abs(std::norm(r.a_r) + std::norm(r.a_t) - 1.0));
      worst_identity = std::max(
          worst_identity, std::abs(Complex(1.0, 0.0) + r.a_r - r.a_t));
    }
  }

  double worst_transmission = 0.0;
  for (double ratio : {0.5, 1.0, 2.0, 4.0}) {
    auto model = LatticeModel::uniform_chain(101, j);
    model.origin_index = 50;
    model.delta[static_cast<size_t>(model.site_to_index(0))] = ratio * std::abs(j);

    analysis::WavepacketSpec spec;
    spec.sigma = 3.0;
    spec.k_eff = -0.5 * kPi;
    spec.n_sites = 19;
    spec.center = -25;
    const auto beta0 = analysis::make_wavepacket(spec, site_labels(model));
    const auto trace = dynamics::evolve(model, beta0, uniform_grid(3.5e-6, 4e-9));

    double transmitted = 0.0;
    for (int r = 0; r < trace.n_sites(); ++r) {
      if (trace.sites[static_cast<size_t>(r)] >= 5) {
        transmitted += std::norm(trace.amps(r, trace.n_times() - 1));
      }
    }
    const auto closed = analysis::defect_scattering(ratio * std::abs(j), j, spec.k_eff);
    worst_transmission =
        std::max(worst_transmission, std::abs(transmitted - std::norm(closed.a_t)));
  }

  const bool pass = worst_identity < 1e-12 && worst_transmission < 0.05;
  report(10, "defect scattering identities and transmission", pass,
         "identity defect = " + fmt(worst_identity) + ", worst |T_sim - T_formula| = " +
             fmt(worst_transmission));
}

void criterion_11_time_reversal() {
  auto clean = LatticeModel::uniform_chain(21, Complex(kTwoPi * 1.25e6, 0.0));
  clean.origin_index = 10;
  ComplexVector beta0 = ComplexVector::Zero(21);
  beta0[10] = 1.0;
  const auto perfect = dynamics::time_reverse_protocol(clean, 0.15e-6, 0.5e-6, beta0, 1e-9);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  std::vector<double> draws(21);
  for (auto& d : draws) d = gauss(rng);

  bool monotone = true;
  double previous = 1.1;
  std::vector<double> fidelities;
  for (double sigma_khz : {0.0, 100.0, 200.0, 400.0, 800.0}) {
    auto model = clean;
    for (int i = 0; i < 21; ++i) {
      model.delta[static_cast<size_t>(i)] =
          kTwoPi * sigma_khz * 1e3 * draws[static_cast<size_t>(i)];
    }
    const auto run = dynamics::time_reverse_protocol(model, 0.15e-6, 0.5e-6, beta0, 1e-9);
    fidelities.push_back(run.fidelity);
    monotone = monotone && run.fidelity < previous;
    previous = run.fidelity;
  }

  const bool pass = perfect.fidelity > 1.0 - 1e-9 && monotone;
  std::string detail = "clean fidelity = " + fmt(perfect.fidelity) + ", sweep =";
  for (double f : fidelities) detail += " " + fmt(f);
  report(11, "time-reversal revival and disorder sensitivity", pass, detail);
}

void criterion_12_tuning_fit() {
  const auto params = reference_params();
  const auto squids = reference_squids();
  device::TuningCalibration calib{kPi * 0.0796, 4.481, 4000.0, 0.0};

  auto make_samples = [&](double noise_hz, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, kTwoPi * noise_hz);
    std::vector<std::pair<double, double>> samples;
    for (int i = 0; i <= 56; ++i) {
      const double v = calib.v_ss - 7.0 + 14.0 * i / 56.0;
      double w = device::tuning_curve(params, squids, calib, 32, v);
      if (noise_hz > 0.0) w += gauss(rng);
      samples.emplace_back(v, w);
    }
    return samples;
  };
  const analysis::TuningFitGuess guess{calib.g_volt * 1.06, calib.v_ss + 0.4,
                                       params.omega_rt * 1.01, params.a_ratio * 1.15,
                                       params.b_ratio * 0.7, 0.02};

  const auto clean = analysis::fit_tuning(make_samples(0.0, 0), 32, guess);
  const double g_err0 = std::abs(clean.g_volt - calib.g_volt) / calib.g_volt;
  const double v_err0 = std::abs(clean.v_ss - calib.v_ss) / calib.v_ss;

  const auto noisy = analysis::fit_tuning(make_samples(100e3, 77), 32, guess);
  const double g_err1 = std::abs(noisy.g_volt - calib.g_volt) / calib.g_volt;
  const double v_err1 = std::abs(noisy.v_ss - calib.v_ss) / calib.v_ss;

  const bool pass = g_err0 < 1e-3 && v_err0 < 1e-3 && g_err1 < 0.01 && v_err1 < 0.01 &&
                    clean.degenerate_b_dsq;
  report(12, "tuning fit recovers the voltage map and flags B/d_sq2", pass,
         "noiseless (G, Vss) err = (" + fmt(100 * g_err0) + "%, " + fmt(100 * v_err0) +
             "%), noisy = (" + fmt(100 * g_err1) + "%, " + fmt(100 * v_err1) +
             "%), degenerate flag = " + (clean.degenerate_b_dsq ? "yes" : "no"));
}

void criterion_13_determinism(const std::string& cli, const fs::path& config_dir) {
  if (cli.empty() || config_dir.empty()) {
    report(13, "byte-identical reruns of the example configs", false,
           "CLI path and config directory arguments are required");
    return;
  }

  std::vector<fs::path> configs;
  for (const auto& entry : fs::directory_iterator(config_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("fig", 0) == 0 && entry.path().extension() == ".json") {
      configs.push_back(entry.path());
    }
  }
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) {
    report(13, "byte-identical reruns of the example configs", false,
           "no experiment configs found in " + config_dir.string());
    return;
  }

  auto read_bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  bool pass = true;
  std::string detail;
  const fs::path work = fs::temp_directory_path() / "synthlat_accept_determinism";
  fs::remove_all(work);
  for (const auto& config : configs) {
    const fs::path out_a = work / (config.stem().string() + "_a");
    const fs::path out_b = work / (config.stem().string() + "_b");
    for (const auto& out : {out_a, out_b}) {
      const std::string cmd =
          cli + " run " + config.string() + " --out " + out.string() + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        pass = false;
        detail += config.stem().string() + ":run-failed ";
      }
    }
    if (!pass) break;
    int compared = 0;
    for (const auto& artifact : fs::directory_iterator(out_a)) {
      if (artifact.path().extension() != ".csv") continue;
      ++compared;
      if (read_bytes(artifact.path()) !=
          read_bytes(out_b / artifact.path().filename())) {
        pass = false;
        detail += config.stem().string() + ":" + artifact.path().filename().string() +
                  " differs ";
      }
    }
    if (compared == 0) {
      pass = false;
      detail += config.stem().string() + ": no CSV artifacts ";
    }
    detail += config.stem().string() + " ";
  }
  report(13, "byte-identical reruns of the example configs", pass,
         pass ? "configs checked: " + detail : detail);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const fs::path config_dir = argc > 2 ? argv[2] : "";

  criterion_1_mode_solver();
  criterion_2_zero_point_structure();
  criterion_3_coupling_magnitude();
  criterion_4_scattering_identities();
  criterion_5_kappa_e_integral();
  criterion_6_bloch_oscillations();
  criterion_7_group_velocity();
  criterion_8_dispersion_pipeline();
  criterion_9_band_model_fits();
  criterion_10_defect_scattering();
  criterion_11_time_reversal();
  criterion_12_tuning_fit();
  criterion_13_determinism(cli, config_dir);

  std::printf("%d of 13 criteria passed\n", 13 - failures);
  return failures == 0 ? 0 : 1;
}
