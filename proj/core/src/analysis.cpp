#include "synthlat/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/QR>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/MatrixFunctions>

#include "synthlat/optim.hpp"

namespace synthlat::analysis {

namespace {

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

double fold_phase(double theta) {
  double t = std::remainder(theta, kTwoPi);
  if (t <= -kPi) t += kTwoPi;
  return t;
}

/// Least squares through column-pivoted QR; throws on rank deficiency.
RealVector linear_fit(const RealMatrix& design, const RealVector& rhs) {
  Eigen::ColPivHouseholderQR<RealMatrix> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < design.cols()) {
    throw NumericalError("band fit: rank-deficient design matrix");
  }
  return qr.solve(rhs);
}

double rms(const RealVector& r) {
  return r.size() > 0 ? std::sqrt(r.squaredNorm() / r.size()) : 0.0;
}

}  // namespace

DispersionResult extract_dispersion(const dynamics::SiteTimeTrace& trace,
                                    const lattice::LatticeModel& model,
                                    const scattering::ChannelModel& channel,
                                    const DispersionOptions& options) {
  trace.validate();
  const int n_sites = trace.n_sites();
  const int n_t = trace.n_times();
  if (n_sites < 2 || n_t < 16) {
    throw ConfigError("dispersion: need at least 2 sites and 16 time samples");
  }
  const double dt = trace.times[1] - trace.times[0];
  for (int i = 1; i < n_t; ++i) {
    if (std::abs(trace.times[i] - trace.times[i - 1] - dt) > 1e-9 * dt) {
      throw ConfigError("dispersion: time grid must be uniform");
    }
  }

  ComplexMatrix field = trace.amps;
  if (options.correct_channel) {
    for (int r = 0; r < n_sites; ++r) {
      const int idx = model.site_to_index(trace.sites[static_cast<size_t>(r)]);
      const Complex gain = -std::sqrt(model.kappa_e[idx]) * channel.out_gain(idx) *
                           std::polar(1.0, channel.lab_frequency(idx) * channel.t_out);
      if (std::abs(gain) == 0.0) throw ConfigError("dispersion: zero channel gain");
      field.row(r) /= gain;
    }
  }

  // Time transform sum_t beta(t) e^{+i w t} via the conjugate trick, zero
  // padded for frequency resolution.
  const int m = next_pow2(options.time_zero_pad * n_t);
  Eigen::FFT<double> fft;
  ComplexMatrix time_spec(n_sites, m);
  std::vector<Complex> in(static_cast<size_t>(m), Complex(0.0, 0.0));
  std::vector<Complex> out(static_cast<size_t>(m));
  for (int r = 0; r < n_sites; ++r) {
    for (int t = 0; t < n_t; ++t) in[static_cast<size_t>(t)] = std::conj(field(r, t));
    std::fill(in.begin() + n_t, in.end(), Complex(0.0, 0.0));
    fft.fwd(out, in);
    for (int f = 0; f < m; ++f) time_spec(r, f) = std::conj(out[static_cast<size_t>(f)]);
  }

  // Site transform sum_n beta_n e^{-i k n}; site count is small, evaluate directly
  // with the trace's relative site labels so gaps or offsets keep their meaning.
  DispersionResult result;
  result.k_grid.resize(static_cast<size_t>(n_sites));
  std::vector<int> k_order(static_cast<size_t>(n_sites));
  for (int q = 0; q < n_sites; ++q) {
    double k = kTwoPi * q / n_sites;
    if (k > kPi + 1e-12) k -= kTwoPi;
    result.k_grid[static_cast<size_t>(q)] = k;
    k_order[static_cast<size_t>(q)] = q;
  }
  std::sort(k_order.begin(), k_order.end(), [&](int a, int b) {
    return result.k_grid[static_cast<size_t>(a)] < result.k_grid[static_cast<size_t>(b)];
  });

  result.omega_grid.resize(static_cast<size_t>(m));
  std::vector<int> f_order(static_cast<size_t>(m));
  for (int f = 0; f < m; ++f) {
    const int folded = f < (m + 1) / 2 ? f : f - m;
    result.omega_grid[static_cast<size_t>(f)] = kTwoPi * folded / (m * dt);
    f_order[static_cast<size_t>(f)] = f;
  }
  std::sort(f_order.begin(), f_order.end(), [&](int a, int b) {
    return result.omega_grid[static_cast<size_t>(a)] < result.omega_grid[static_cast<size_t>(b)];
  });

  RealMatrix power(n_sites, m);
  for (int q = 0; q < n_sites; ++q) {
    ComplexVector row = ComplexVector::Zero(m);
    const double k = result.k_grid[static_cast<size_t>(q)];
    for (int r = 0; r < n_sites; ++r) {
      const Complex phase = std::polar(1.0, -k * trace.sites[static_cast<size_t>(r)]);
      row += phase * time_spec.row(r).transpose();
    }
    power.row(q) = row.cwiseAbs2().transpose();
  }

  // Reorder grids ascending.
  std::sort(result.k_grid.begin(), result.k_grid.end());
  std::sort(result.omega_grid.begin(), result.omega_grid.end());
  result.power.resize(n_sites, m);
  for (int q = 0; q < n_sites; ++q) {
    for (int f = 0; f < m; ++f) {
      result.power(q, f) = power(k_order[static_cast<size_t>(q)], f_order[static_cast<size_t>(f)]);
    }
  }

  // Per-k ridge with 3-point parabolic refinement.
  result.ridge.reserve(static_cast<size_t>(n_sites));
  result.ridge_power.reserve(static_cast<size_t>(n_sites));
  const double dw = result.omega_grid[1] - result.omega_grid[0];
  for (int q = 0; q < n_sites; ++q) {
    Eigen::Index peak = 0;
    result.power.row(q).maxCoeff(&peak);
    double w = result.omega_grid[static_cast<size_t>(peak)];
    if (peak > 0 && peak + 1 < m) {
      const double pm = result.power(q, peak - 1);
      const double p0 = result.power(q, peak);
      const double pp = result.power(q, peak + 1);
      const double denom = pm - 2.0 * p0 + pp;
      if (denom < 0.0) w += 0.5 * (pm - pp) / denom * dw;
    }
    result.ridge.emplace_back(result.k_grid[static_cast<size_t>(q)], w);
    result.ridge_power.push_back(result.power(q, peak));

    // A comparable secondary maximum well away from the ridge marks ambiguity
    // (disorder broadening exceeding the band curvature).
    double second = 0.0;
    for (int f = 0; f < m; ++f) {
      if (std::abs(static_cast<double>(f - peak)) * dw > 8.0 * dw) {
        second = std::max(second, result.power(q, f));
      }
    }
    if (second > 0.5 * result.power(q, peak)) result.ridge_ambiguous = true;
  }

  // Peak-power-weighted cosine fit: strong ridge points carry the band shape,
  // weak band-edge bins otherwise bias |J| low on short open chains.
  {
    const auto n = static_cast<Eigen::Index>(result.ridge.size());
    const double peak_power =
        *std::max_element(result.ridge_power.begin(), result.ridge_power.end());
    RealMatrix design(n, 2);
    RealVector rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double weight =
          result.ridge_power[static_cast<size_t>(i)] / std::max(peak_power, 1e-300);
      design(i, 0) = weight * std::cos(result.ridge[static_cast<size_t>(i)].first);
      design(i, 1) = weight * std::sin(result.ridge[static_cast<size_t>(i)].first);
      rhs[i] = weight * result.ridge[static_cast<size_t>(i)].second;
    }
    const RealVector c = linear_fit(design, rhs);
    result.fit.j_mag = 0.5 * std::hypot(c[0], c[1]);
    result.fit.theta_mod = std::atan2(-c[1], c[0]);
    RealVector residual(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      residual[i] = c[0] * std::cos(result.ridge[static_cast<size_t>(i)].first) +
                    c[1] * std::sin(result.ridge[static_cast<size_t>(i)].first) -
                    result.ridge[static_cast<size_t>(i)].second;
    }
    result.fit.rms_residual = rms(residual);
  }
  return result;
}

BandFit fit_band_models(const std::vector<std::pair<double, double>>& ridge,
                        BandModel model) {
  if (ridge.empty()) throw ConfigError("band fit: empty ridge");
  const auto n = static_cast<Eigen::Index>(ridge.size());
  RealVector k(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k[i] = ridge[static_cast<size_t>(i)].first;
    w[i] = ridge[static_cast<size_t>(i)].second;
  }

  BandFit fit;
  fit.model = model;
  switch (model) {
    case BandModel::nn: {
      RealMatrix design(n, 2);
      design.col(0) = k.array().cos();
      design.col(1) = k.array().sin();
      const RealVector c = linear_fit(design, w);
      fit.coefficients = {0.5 * std::hypot(c[0], c[1])};
      fit.theta = std::atan2(-c[1], c[0]);
      fit.rms_residual = rms(design * c - w);
      break;
    }
    case BandModel::second_nn: {
      RealMatrix design(n, 1);
      design.col(0) = (2.0 * k.array()).cos();
      const RealVector c = linear_fit(design, w);
      fit.coefficients = {0.5 * std::abs(c[0])};
      fit.rms_residual = rms(design * c - w);
      break;
    }
    case BandModel::second_nn_h2: {
      RealMatrix design(n, 2);
      design.col(0) = (2.0 * k.array()).cos();
      design.col(1) = (4.0 * k.array()).cos();
      const RealVector c = linear_fit(design, w);
      fit.coefficients = {0.5 * std::abs(c[0]), 0.5 * std::abs(c[1])};
      fit.rms_residual = rms(design * c - w);
      break;
    }
    case BandModel::two_tone: {
      // Nonlinear in theta2 only; multi-start over the phase with an analytic
      // Jacobian for each run.
      auto residual_of = [&](const RealVector& x) {
        RealVector r(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          r[i] = x[0] * std::cos(k[i]) + x[1] * std::cos(2.0 * k[i] + x[3]) +
                 x[2] * std::cos(4.0 * k[i] + 2.0 * x[3]) - w[i];
        }
        return r;
      };
      auto jacobian_of = [&](const RealVector& x) {
        RealMatrix jac(n, 4);
        for (Eigen::Index i = 0; i < n; ++i) {
          jac(i, 0) = std::cos(k[i]);
          jac(i, 1) = std::cos(2.0 * k[i] + x[3]);
          jac(i, 2) = std::cos(4.0 * k[i] + 2.0 * x[3]);
          jac(i, 3) = -x[1] * std::sin(2.0 * k[i] + x[3]) -
                      2.0 * x[2] * std::sin(4.0 * k[i] + 2.0 * x[3]);
        }
        return jac;
      };

      const double scale = w.cwiseAbs().maxCoeff();
      optim::LmResult best;
      best.cost = std::numeric_limits<double>::infinity();
      for (int s = 0; s < 8; ++s) {
        RealVector x0(4);
        x0 << 0.5 * scale, 0.5 * scale, 0.1 * scale, -kPi + kTwoPi * s / 8.0;
        const auto run = optim::levenberg_marquardt(residual_of, x0, {}, jacobian_of);
        if (run.cost < best.cost) best = run;
      }
      RealVector x = best.params;
      if (x[1] < 0.0) {  // absorb a J2 sign flip into the phase
        x[1] = -x[1];
        x[3] += kPi;
      }
      fit.coefficients = {0.5 * std::abs(x[0]), 0.5 * x[1], 0.5 * std::abs(x[2])};
      fit.theta2 = fold_phase(x[3]);
      fit.rms_residual = rms(residual_of(x));
      break;
    }
  }
  return fit;
}

TuningFitResult fit_tuning(const std::vector<std::pair<double, double>>& samples,
                           int mode_n, const TuningFitGuess& guess) {
  if (samples.size() < 8) throw ConfigError("tuning fit: need at least 8 samples");

  double v_min = samples.front().first, v_max = samples.front().first;
  double w_min = samples.front().second, w_max = samples.front().second;
  for (const auto& [v, w] : samples) {
    v_min = std::min(v_min, v);
    v_max = std::max(v_max, v);
    w_min = std::min(w_min, w);
    w_max = std::max(w_max, w);
  }
  if (guess.g_volt > 0.0 && (v_max - v_min) * guess.g_volt < 0.9 * kPi) {
    throw ConfigError("tuning fit: samples must span at least one flux period");
  }
  const double w_mean = 0.5 * (w_min + w_max);
  if (w_max - w_min < 1e-9 * std::abs(w_mean)) {
    throw NumericalError("tuning fit: no tuning contrast in the data (degenerate input)");
  }

  // Internal parameterization (ln G, V_ss, ln w_rt, ln A, ln B, s) with
  // d_sq2 = tanh(s)^2 makes every constraint implicit and smooth; hard
  // rejection walls inside the step search would stall the damped descent,
  // and d_sq2 beyond 1 would alias onto a flux-shifted copy of the model.
  const double w_scale = kTwoPi * 1e6;  // residuals in MHz keep the cost well-scaled
  auto residual = [&](const RealVector& p) {
    RealVector r(static_cast<Eigen::Index>(samples.size()));
    const double g = std::exp(p[0]);
    const double v_ss = p[1];
    const double omega_rt = std::exp(p[2]);
    const double a = std::exp(p[3]);
    const double b = std::exp(p[4]);
    const double d2 = std::tanh(p[5]) * std::tanh(p[5]);
    for (size_t i = 0; i < samples.size(); ++i) {
      const double f = g * (samples[i].first - v_ss);
      const double a_t =
          a * std::sqrt(std::cos(f) * std::cos(f) + d2 * std::sin(f) * std::sin(f));
      double w_model = 0.0;
      try {
        w_model = device::solve_mode_y(mode_n, a_t, b) * omega_rt / kPi;
      } catch (const NumericalError&) {
        w_model = 0.0;  // keeps the residual finite in pathological corners
      }
      r[static_cast<Eigen::Index>(i)] =
          w_model > 0.0 ? (w_model - samples[i].second) / w_scale : 1e6;
    }
    return r;
  };

  // The cost surface is comb-like in (G, V_ss): a few-percent period error
  // misaligns every flux dip and strands descent in a local minimum. A coarse
  // alignment scan around the guess initializes the solver on the right comb
  // tooth first. The scan compares mean-subtracted curves so that level errors
  // from the other (still unrefined) parameters cannot outvote the alignment.
  RealVector x0(6);
  const double s_guess = std::atanh(std::sqrt(std::clamp(guess.d_sq2, 1e-6, 0.99)));
  x0 << std::log(guess.g_volt), guess.v_ss, std::log(guess.omega_rt),
      std::log(guess.a_ratio), std::log(guess.b_ratio), s_guess;
  {
    auto shape_cost = [&](const RealVector& p) {
      RealVector r = residual(p);
      return (r.array() - r.mean()).matrix().squaredNorm();
    };
    double best_cost = shape_cost(x0);
    RealVector best = x0;
    RealVector trial = x0;
    const double period = kPi / guess.g_volt;
    for (int gi = -10; gi <= 10; ++gi) {
      trial[0] = std::log(guess.g_volt * (1.0 + 0.012 * gi));
      for (int vi = -12; vi <= 12; ++vi) {
        trial[1] = guess.v_ss + period * vi / 24.0;
        const double cost = shape_cost(trial);
        if (cost < best_cost) {
          best_cost = cost;
          best = trial;
        }
      }
    }
    x0 = best;

    // Level the comb as well: a percent-scale omega_rt error shifts every
    // sample by tens of MHz, which would otherwise dominate the cost and let
    // descent drift into the aliased large-G pseudo-noise basin.
    double w_data_mean = 0.0;
    for (const auto& [v, w] : samples) w_data_mean += w;
    w_data_mean /= static_cast<double>(samples.size());
    const double mean_residual = residual(x0).mean() * w_scale;
    const double level = w_data_mean / (w_data_mean + mean_residual);
    if (level > 0.5 && level < 2.0) x0[2] += std::log(level);
  }

  optim::LmOptions opts;
  opts.max_iterations = 500;
  const auto lm = optim::levenberg_marquardt(residual, x0, opts);
  if (!lm.converged) throw NumericalError("tuning fit: did not converge");

  TuningFitResult result;
  result.g_volt = std::exp(lm.params[0]);
  result.v_ss = lm.params[1];
  result.omega_rt = std::exp(lm.params[2]);
  result.a_ratio = std::exp(lm.params[3]);
  result.b_ratio = std::exp(lm.params[4]);
  result.d_sq2 = std::tanh(lm.params[5]) * std::tanh(lm.params[5]);
  result.jtj = lm.jtj;
  result.converged = lm.converged;
  result.iterations = lm.iterations;

  // Curvature of the log-space parameters measures relative sensitivity
  // directly: flat directions for ln B and the asymmetry mark the known
  // degeneracy.
  const RealMatrix inv = lm.jtj.completeOrthogonalDecomposition().pseudoInverse();
  result.relative_uncertainty.resize(6);
  for (int i = 0; i < 6; ++i) {
    result.relative_uncertainty[i] = std::sqrt(std::max(0.0, inv(i, i)));
  }
  result.relative_uncertainty[1] /= std::max(std::abs(result.v_ss), 1e-12);
  {
    // Map the internal s = atanh(sqrt(d_sq2)) spread onto d_sq2 itself.
    const double t = std::max(std::abs(std::tanh(lm.params[5])), 1e-6);
    result.relative_uncertainty[5] *= 2.0 * (1.0 - t * t) / t;
  }
  const double well = std::max(result.relative_uncertainty[0], result.relative_uncertainty[1]);
  result.degenerate_b_dsq = result.relative_uncertainty[4] > 50.0 * well &&
                            result.relative_uncertainty[5] > 50.0 * well;
  return result;
}

CalibrationResult calibrate_phases(const lattice::LatticeModel& model,
                                   const std::vector<int>& pair_lower_sites,
                                   const std::vector<double>& theta_sweep,
                                   double t_probe, double amplitude_ratio,
                                   const std::vector<double>& input_phase_offsets) {
  model.validate();
  if (theta_sweep.size() < 4) throw ConfigError("calibration: need at least 4 sweep phases");
  if (!(t_probe > 0.0)) throw ConfigError("calibration: t_probe must be positive");

  auto offset_of = [&](int site) {
    if (input_phase_offsets.empty()) return 0.0;
    const int idx = model.site_to_index(site);
    return input_phase_offsets.at(static_cast<size_t>(idx));
  };

  const ComplexMatrix h = lattice::build_hamiltonian(model);
  const ComplexMatrix u = (Complex(0.0, -1.0) * t_probe * h).exp();

  CalibrationResult result;
  const auto n_sweep = static_cast<Eigen::Index>(theta_sweep.size());
  for (int site : pair_lower_sites) {
    const int i0 = model.site_to_index(site);
    const int i1 = model.site_to_index(site + 1);

    RealMatrix design(n_sweep, 3);
    RealVector rhs(n_sweep);
    for (Eigen::Index s = 0; s < n_sweep; ++s) {
      const double theta = theta_sweep[static_cast<size_t>(s)];
      // On-chip phases are the negatives of the drive phases plus the unknown
      // per-site channel offsets being calibrated.
      const Complex b0 = std::polar(1.0, -offset_of(site));
      const Complex b1 = amplitude_ratio * std::polar(1.0, -(theta + offset_of(site + 1)));
      const Complex beta_n = u(i0, i0) * b0 + u(i0, i1) * b1;
      design(s, 0) = 1.0;
      design(s, 1) = std::cos(theta);
      design(s, 2) = std::sin(theta);
      rhs[s] = std::norm(beta_n);
    }
    const RealVector c = linear_fit(design, rhs);
    const double a = c[0];
    const double b = std::hypot(c[1], c[2]);
    // a + b sin(theta_calib - theta) = a + b sin(tc) cos(theta) - b cos(tc) sin(theta)
    const double theta_calib = b > 0.0 ? std::atan2(c[1], -c[2]) : 0.0;

    result.pair_lower_site.push_back(site);
    result.theta_calib.push_back(fold_phase(theta_calib));
    result.contrast.push_back(b);
    result.offset.push_back(a);
    const double u_prod = std::abs(u(i0, i0)) * std::abs(u(i0, i1));
    result.r_scale.push_back(u_prod > 0.0 ? b / (2.0 * u_prod) : 0.0);
    result.weak_contrast.push_back(b < 1e-6 * std::max(a, 1e-300));
  }
  return result;
}

std::vector<double> compose_awg_phases(const std::vector<double>& theta_calib,
                                       double k_eff) {
  std::vector<double> awg(theta_calib.size() + 1, 0.0);
  for (size_t i = 0; i < theta_calib.size(); ++i) {
    awg[i + 1] = awg[i] + theta_calib[i] - k_eff;
  }
  return awg;
}

ComplexVector make_wavepacket(const WavepacketSpec& spec, const std::vector<int>& sites) {
  if (spec.n_sites < 1) throw ConfigError("wavepacket: n_sites must be >= 1");
  if (!(spec.sigma > 0.0)) throw ConfigError("wavepacket: sigma must be positive");

  const int lo = spec.center - (spec.n_sites - 1) / 2;
  const int hi = lo + spec.n_sites - 1;
  ComplexVector beta = ComplexVector::Zero(static_cast<Eigen::Index>(sites.size()));
  for (size_t i = 0; i < sites.size(); ++i) {
    const int n = sites[i];
    if (n < lo || n > hi) continue;
    const double rel = n - spec.center;
    beta[static_cast<Eigen::Index>(i)] =
        std::exp(-rel * rel / (2.0 * spec.sigma * spec.sigma)) *
        std::polar(1.0, spec.k_eff * rel);
  }
  const double norm = beta.norm();
  if (norm == 0.0) throw ConfigError("wavepacket: window misses every trace site");
  return beta / norm;
}

GroupVelocityFit group_velocity(const dynamics::SiteTimeTrace& trace, double sigma,
                                const std::vector<int>& barrier_sites) {
  trace.validate();
  const auto centroid = dynamics::centroid_trajectory(trace);

  const auto [site_lo, site_hi] =
      std::minmax_element(trace.sites.begin(), trace.sites.end());
  auto too_close = [&](double c) {
    if (c - *site_lo < 2.0 * sigma || *site_hi - c < 2.0 * sigma) return true;
    for (int b : barrier_sites) {
      if (std::abs(c - b) < 2.0 * sigma) return true;
    }
    return false;
  };

  int stop = 0;
  while (stop < trace.n_times() && !too_close(centroid[static_cast<size_t>(stop)])) ++stop;
  if (stop < 3) {
    throw NumericalError("group velocity: fit window touches a boundary immediately");
  }

  double st = 0.0, sc = 0.0, stt = 0.0, stc = 0.0;
  for (int i = 0; i < stop; ++i) {
    st += trace.times[static_cast<size_t>(i)];
    sc += centroid[static_cast<size_t>(i)];
    stt += trace.times[static_cast<size_t>(i)] * trace.times[static_cast<size_t>(i)];
    stc += trace.times[static_cast<size_t>(i)] * centroid[static_cast<size_t>(i)];
  }
  const double denom = stop * stt - st * st;
  if (denom <= 0.0) throw NumericalError("group velocity: degenerate time window");

  GroupVelocityFit fit;
  fit.v_g = (stop * stc - st * sc) / denom;
  fit.t_start = trace.times.front();
  fit.t_end = trace.times[static_cast<size_t>(stop - 1)];
  fit.n_points = stop;
  return fit;
}

DefectScatteringResult defect_scattering(double delta, Complex j, double k_i) {
  const double v_g = -2.0 * std::abs(j) * std::sin(k_i + std::arg(j));
  if (delta == 0.0 && v_g == 0.0) {
    throw ConfigError("defect scattering: degenerate case (zero detuning and group velocity)");
  }
  const Complex denom(delta, -v_g);
  DefectScatteringResult result;
  result.a_r = -delta / denom;
  result.a_t = Complex(0.0, -v_g) / denom;
  result.k_i = k_i;
  result.delta = delta;
  result.v_g = v_g;
  return result;
}

}  // namespace synthlat::analysis
