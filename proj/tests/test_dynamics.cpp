#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "synthlat/constants.hpp"
#include "synthlat/dynamics.hpp"

using namespace synthlat;
using namespace synthlat::dynamics;
using synthlat::lattice::LatticeModel;

namespace {

std::vector<double> uniform_grid(double t_max, int steps) {
  std::vector<double> g(static_cast<size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) g[static_cast<size_t>(i)] = t_max * i / steps;
  return g;
}

}  // namespace

TEST_CASE("evolve: t = 0 returns the initial state exactly") {
  const auto model = LatticeModel::uniform_chain(4, Complex(1e6, 5e5));
  ComplexVector beta0(4);
  beta0 << Complex(1, 0), Complex(0, 0.5), Complex(-0.2, 0.1), Complex(0, 0);
  const auto trace = evolve(model, beta0, {0.0});
  CHECK((trace.amps.col(0) - beta0).norm() == 0.0);
}

TEST_CASE("evolve: single lossy detuned site follows the analytic exponential") {
  LatticeModel model = LatticeModel::uniform_chain(1, {0.0, 0.0});
  model.delta[0] = kTwoPi * 0.7e6;
  model.kappa_i[0] = kTwoPi * 120e3;
  ComplexVector beta0(1);
  beta0 << Complex(0.8, -0.3);
  const auto trace = evolve(model, beta0, uniform_grid(2e-6, 64));
  for (int i = 0; i <= 64; ++i) {
    const double t = trace.times[static_cast<size_t>(i)];
    const Complex expected =
        beta0[0] * std::exp(Complex(-model.kappa_i[0] / 2 * t, -model.delta[0] * t));
    CHECK(std::abs(trace.amps(0, i) - expected) < 1e-12);
  }
}

TEST_CASE("evolve: two lossless sites Rabi-oscillate at |J|") {
  const double j_mag = kTwoPi * 1.0e6;
  const auto model = LatticeModel::uniform_chain(2, Complex(0.0, -j_mag));
  ComplexVector beta0(2);
  beta0 << 1.0, 0.0;
  const auto trace = evolve(model, beta0, uniform_grid(1.5e-6, 300));
  for (int i = 0; i <= 300; ++i) {
    const double t = trace.times[static_cast<size_t>(i)];
    CHECK(std::norm(trace.amps(1, i)) ==
          doctest::Approx(std::sin(j_mag * t) * std::sin(j_mag * t)).epsilon(1e-9));
  }
}

TEST_CASE("evolve: norm conservation, linearity and decay bounds") {
  auto model = LatticeModel::uniform_chain(15, Complex(-1.1e6, 0.6e6));
  for (int i = 0; i < 15; ++i) model.delta[static_cast<size_t>(i)] = 2e5 * std::sin(1.7 * i);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  ComplexVector b1(15), b2(15);
  for (int i = 0; i < 15; ++i) {
    b1[i] = Complex(gauss(rng), gauss(rng));
    b2[i] = Complex(gauss(rng), gauss(rng));
  }

  SUBCASE("lossless norm stays put to 1e-9") {
    const auto trace = evolve(model, b1, uniform_grid(20e-6, 2000));
    for (int i = 0; i <= 2000; ++i) {
      CHECK(trace.amps.col(i).norm() == doctest::Approx(b1.norm()).epsilon(1e-9));
    }
  }

  SUBCASE("evolution is linear in the initial state") {
    const Complex a(0.3, -1.2), b(0.8, 0.4);
    const auto grid = uniform_grid(3e-6, 40);
    const auto t1 = evolve(model, b1, grid);
    const auto t2 = evolve(model, b2, grid);
    const auto t12 = evolve(model, ComplexVector(a * b1 + b * b2), grid);
    const ComplexVector lhs = t12.amps.col(40);
    const ComplexVector rhs = a * t1.amps.col(40) + b * t2.amps.col(40);
    CHECK((lhs - rhs).norm() < 1e-9 * rhs.norm());
  }

  SUBCASE("nonuniform loss is bracketed by the extreme rates") {
    for (int i = 0; i < 15; ++i) {
      model.kappa_i[static_cast<size_t>(i)] = kTwoPi * (60e3 + 8e3 * i);
    }
    const double k_min = model.kappa_i[0];
    const double k_max = model.kappa_i[14];
    const auto trace = evolve(model, b1, uniform_grid(10e-6, 500));
    for (int i = 1; i <= 500; ++i) {
      const double t = trace.times[static_cast<size_t>(i)];
      const double ratio = trace.amps.col(i).norm() / b1.norm();
      CHECK(ratio <= std::exp(-k_min * t / 2) * (1 + 1e-9));
      CHECK(ratio >= std::exp(-k_max * t / 2) * (1 - 1e-9));
    }
  }
}

TEST_CASE("evolve: modulation-phase gauge leaves site magnitudes unchanged") {
  auto model = LatticeModel::uniform_chain(9, Complex(-1.25e6 * kTwoPi, 0.0));
  model.origin_index = 4;
  const double c = 0.77;
  const auto shifted = lattice::with_modulation_phase(model, c);

  ComplexVector beta0 = ComplexVector::Zero(9);
  beta0[4] = 1.0;
  beta0[5] = Complex(0.3, 0.4);

  ComplexVector regauged = beta0;
  for (int i = 0; i < 9; ++i) {
    regauged[i] *= std::polar(1.0, -model.index_to_site(i) * c);
  }
  const auto grid = uniform_grid(2e-6, 100);
  const auto base = evolve(model, beta0, grid);
  const auto gauged = evolve(shifted, regauged, grid);
  for (int t = 0; t <= 100; ++t) {
    for (int r = 0; r < 9; ++r) {
      CHECK(std::abs(gauged.amps(r, t)) ==
            doctest::Approx(std::abs(base.amps(r, t))).epsilon(1e-9));
    }
  }
}

TEST_CASE("run_sequence: driven uncoupled site reaches the input-output steady state") {
  LatticeModel model = LatticeModel::uniform_chain(3, {0.0, 0.0}, kTwoPi * 60e3, kTwoPi * 40e3);
  model.origin_index = 1;
  const double kappa = model.kappa_total(1);
  const Complex b_in(0.7, 0.2);

  PulseSequence seq;
  seq.segments.push_back({80.0 / kappa, false, 0.0, {{0, b_in}}});
  const auto trace = run_sequence(model, seq, 4e-9);

  const Complex expected = std::sqrt(model.kappa_e[1]) * b_in / (kappa / 2.0);
  const Complex last = trace.amps(1, trace.amps.cols() - 1);
  CHECK(std::abs(last - expected) < 1e-6 * std::abs(expected));

  SUBCASE("lossless cavity reflects the full input in steady state") {
    LatticeModel lossless = model;
    lossless.kappa_i = {0.0, 0.0, 0.0};
    const auto state = run_sequence(lossless, seq, 4e-9);
    const auto out = output_field(lossless, seq, state, 4e-9);
    const Complex out_ss = out.amps(1, out.amps.cols() - 1);
    CHECK(std::abs(out_ss) == doctest::Approx(std::abs(b_in)).epsilon(1e-6));
  }
}

TEST_CASE("run_sequence: light cone bounded by the maximum group velocity") {
  const double j_mag = kTwoPi * 1.25e6;
  auto model = LatticeModel::uniform_chain(41, Complex(-j_mag, 0.0));
  model.origin_index = 20;
  ComplexVector beta0 = ComplexVector::Zero(41);
  beta0[20] = 1.0;

  PulseSequence seq;
  seq.segments.push_back({1.2e-6, true, 0.0, {}});
  const auto trace = run_sequence(model, seq, 2e-9, beta0);

  for (int c = 0; c < trace.n_times(); ++c) {
    const double t = trace.times[static_cast<size_t>(c)];
    const double cone = 2.0 * j_mag * t + 4.0;  // few-site quantum smearing margin
    double outside = 0.0;
    for (int r = 0; r < trace.n_sites(); ++r) {
      if (std::abs(trace.sites[static_cast<size_t>(r)]) > cone) {
        outside += std::norm(trace.amps(r, c));
      }
    }
    CHECK(outside < 1e-3);
  }
}

TEST_CASE("run_sequence: barrier geometry reflects near half a microsecond") {
  const double j_mag = kTwoPi * 1.25e6;
  auto model = LatticeModel::uniform_chain(27, Complex(-j_mag, 0.0), kTwoPi * 60e3,
                                           kTwoPi * 40e3);
  model.origin_index = 8;  // sites -8..18
  model.delta[static_cast<size_t>(model.site_to_index(-6))] = kTwoPi * 8e6;
  model.kappa_i[static_cast<size_t>(model.site_to_index(-6))] += kTwoPi * 2e6;
  model.delta[static_cast<size_t>(model.site_to_index(7))] = -kTwoPi * 6e6;
  model.kappa_i[static_cast<size_t>(model.site_to_index(7))] += kTwoPi * 2e6;

  ComplexVector beta0 = ComplexVector::Zero(27);
  beta0[8] = 1.0;
  PulseSequence seq;
  seq.segments.push_back({1.0e-6, true, 0.0, {}});
  const auto trace = run_sequence(model, seq, 2e-9, beta0);

  // The envelope reaches the last pre-barrier site around 0.5 us...
  const int row_pre = trace.row_of(-5);
  double peak = 0.0;
  double t_peak = 0.0;
  for (int c = 0; c < trace.n_times(); ++c) {
    const double mag = std::abs(trace.amps(row_pre, c));
    if (mag > peak) {
      peak = mag;
      t_peak = trace.times[static_cast<size_t>(c)];
    }
  }
  CHECK(t_peak > 0.3e-6);
  CHECK(t_peak < 0.8e-6);

  // ...and little signal leaks past the barriers.
  double beyond = 0.0, inside = 0.0;
  const int c_end = trace.n_times() - 1;
  for (int r = 0; r < trace.n_sites(); ++r) {
    const int site = trace.sites[static_cast<size_t>(r)];
    const double p = std::norm(trace.amps(r, c_end));
    if (site < -6 || site > 7) {
      beyond += p;
    } else {
      inside += p;
    }
  }
  CHECK(beyond < 0.1 * inside);
}

TEST_CASE("bloch: period helper and recurrence on the tilted lattice") {
  const double detuning = kTwoPi * 3e6;
  CHECK(bloch_period(detuning) == doctest::Approx(333.333e-9).epsilon(1e-6));
  CHECK_THROWS_AS(bloch_period(0.0), ConfigError);

  const double j_mag = kTwoPi * 1.25e6;
  auto model = LatticeModel::uniform_chain(61, Complex(-j_mag, 0.0));
  model.origin_index = 30;
  ComplexVector beta0 = ComplexVector::Zero(61);
  beta0[30] = 1.0;

  const double t_b = bloch_period(detuning);
  const auto trace = bloch_oscillate(model, detuning, beta0, t_b, t_b / 333.0);
  const ComplexVector final_state = trace.amps.col(trace.amps.cols() - 1);
  CHECK(overlap_fidelity(beta0, final_state) > 0.999999);

  // Site magnitudes along the way follow the Bessel solution of the tilted chain.
  const int quarter = (trace.n_times() - 1) / 4;
  const double t_q = trace.times[static_cast<size_t>(quarter)];
  const double z = (4.0 * j_mag / detuning) * std::sin(detuning * t_q / 2.0);
  for (int r = 0; r < 61; ++r) {
    const double expected = std::abs(oracles::bessel_jn(trace.sites[static_cast<size_t>(r)], z));
    CHECK(std::abs(trace.amps(r, quarter)) == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("bloch: vanishing detuning reduces to the free light cone") {
  const double j_mag = kTwoPi * 1.0e6;
  auto model = LatticeModel::uniform_chain(41, Complex(-j_mag, 0.0));
  model.origin_index = 20;
  ComplexVector beta0 = ComplexVector::Zero(41);
  beta0[20] = 1.0;

  CHECK_THROWS_AS(bloch_oscillate(model, 0.0, beta0, 1e-6), ConfigError);

  const auto tiny = bloch_oscillate(model, kTwoPi * 1e3, beta0, 1e-6, 2e-9);
  const auto free_run = evolve(model, beta0, tiny.times);
  const ComplexVector a = tiny.amps.col(tiny.amps.cols() - 1);
  const ComplexVector b = free_run.amps.col(free_run.amps.cols() - 1);
  CHECK(overlap_fidelity(a, b) > 0.999);
}

TEST_CASE("time reversal: lossless disorder-free echo is perfect") {
  const double j_mag = kTwoPi * 1.25e6;
  auto model = LatticeModel::uniform_chain(21, Complex(-j_mag, 0.0));
  model.origin_index = 10;
  ComplexVector beta0 = ComplexVector::Zero(21);
  beta0[10] = 1.0;

  const auto result = time_reverse_protocol(model, 0.15e-6, 0.5e-6, beta0, 1e-9);
  CHECK_FALSE(result.even_coupling_warning);
  CHECK(result.fidelity > 1.0 - 1e-9);
}

TEST_CASE("time reversal: uniform loss keeps fidelity while the norm decays") {
  const double j_mag = kTwoPi * 1.25e6;
  const double kappa = kTwoPi * 100e3;
  auto model = LatticeModel::uniform_chain(21, Complex(-j_mag, 0.0), 0.0, kappa);
  model.origin_index = 10;
  ComplexVector beta0 = ComplexVector::Zero(21);
  beta0[10] = 1.0;

  const double pulse = 0.15e-6, gap = 0.5e-6;
  const auto result = time_reverse_protocol(model, pulse, gap, beta0, 1e-9);
  CHECK(result.fidelity > 1.0 - 1e-9);

  const double t_total = result.trace.times.back();
  const double power_ratio =
      result.trace.amps.col(result.trace.amps.cols() - 1).squaredNorm() / beta0.squaredNorm();
  CHECK(power_ratio == doctest::Approx(std::exp(-kappa * t_total)).epsilon(1e-9));
}

TEST_CASE("time reversal: fidelity degrades monotonically with disorder") {
  const double j_mag = kTwoPi * 1.25e6;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  std::vector<double> draws(21);
  for (auto& d : draws) d = gauss(rng);

  double previous = 1.1;
  for (double sigma_khz : {0.0, 100.0, 200.0, 400.0, 800.0}) {
    auto model = LatticeModel::uniform_chain(21, Complex(-j_mag, 0.0));
    model.origin_index = 10;
    for (int i = 0; i < 21; ++i) {
      model.delta[static_cast<size_t>(i)] = kTwoPi * sigma_khz * 1e3 * draws[static_cast<size_t>(i)];
    }
    ComplexVector beta0 = ComplexVector::Zero(21);
    beta0[10] = 1.0;
    const auto result = time_reverse_protocol(model, 0.15e-6, 0.5e-6, beta0, 1e-9);
    CHECK(result.fidelity < previous);
    previous = result.fidelity;
  }
  CHECK(previous < 1.0);
}

TEST_CASE("time reversal: even couplings raise the warning flag") {
  auto model = LatticeModel::uniform_chain(11, Complex(-1e6, 0.0));
  model.couplings[2] = std::vector<Complex>(9, Complex(2e5, 0.0));
  model.origin_index = 5;
  ComplexVector beta0 = ComplexVector::Zero(11);
  beta0[5] = 1.0;
  const auto result = time_reverse_protocol(model, 0.1e-6, 0.2e-6, beta0, 1e-9);
  CHECK(result.even_coupling_warning);
}

TEST_CASE("trim_trace keeps the tail and can rebase") {
  const auto model = LatticeModel::uniform_chain(2, Complex(1e6, 0.0));
  ComplexVector beta0(2);
  beta0 << 1.0, 0.0;
  const auto trace = evolve(model, beta0, uniform_grid(1e-6, 100));
  const auto cut = trim_trace(trace, 0.5e-6);
  CHECK(cut.times.front() >= 0.5e-6);
  CHECK(cut.n_times() == 51);
  const auto rebased = trim_trace(trace, 0.5e-6, true);
  CHECK(rebased.times.front() == 0.0);
  CHECK_THROWS_AS(trim_trace(trace, 2e-6), ConfigError);
}
