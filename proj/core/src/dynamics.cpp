#include "synthlat/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace synthlat::dynamics {

namespace {

ComplexMatrix propagator(const ComplexMatrix& h_eff, double dt) {
  return (Complex(0.0, -1.0) * dt * h_eff).exp();
}

/// Exact one-step map beta' = P beta + w for d(beta)/dt = -i H beta + s,
/// obtained from the exponential of the augmented matrix [[-iH, s], [0, 0]].
struct DrivenStep {
  ComplexMatrix p;
  ComplexVector w;

  static DrivenStep make(const ComplexMatrix& h_eff, const ComplexVector& s, double dt) {
    const auto n = h_eff.rows();
    ComplexMatrix aug = ComplexMatrix::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = Complex(0.0, -1.0) * h_eff;
    aug.topRightCorner(n, 1) = s;
    ComplexMatrix e = (dt * aug).exp();
    return {e.topLeftCorner(n, n), e.topRightCorner(n, 1)};
  }
};

ComplexVector drive_vector(const lattice::LatticeModel& model,
                           const std::vector<InputTone>& inputs) {
  ComplexVector s = ComplexVector::Zero(model.n_sites);
  for (const auto& tone : inputs) {
    const int idx = model.site_to_index(tone.site);
    s[idx] += std::sqrt(model.kappa_e[idx]) * tone.amplitude;
  }
  return s;
}

std::vector<int> site_labels(const lattice::LatticeModel& model) {
  std::vector<int> sites(static_cast<size_t>(model.n_sites));
  for (int i = 0; i < model.n_sites; ++i) sites[i] = model.index_to_site(i);
  return sites;
}

int segment_steps(double duration, double dt) {
  const int n = static_cast<int>(std::llround(duration / dt));
  return std::max(1, n);
}

}  // namespace

void PulseSequence::validate() const {
  if (segments.empty()) throw ConfigError("pulse sequence: no segments");
  for (const auto& seg : segments) {
    if (!(seg.duration > 0.0)) throw ConfigError("pulse sequence: durations must be > 0");
  }
}

int SiteTimeTrace::row_of(int site) const {
  auto it = std::find(sites.begin(), sites.end(), site);
  if (it == sites.end()) {
    throw ConfigError("trace: site " + std::to_string(site) + " not recorded");
  }
  return static_cast<int>(it - sites.begin());
}

void SiteTimeTrace::validate() const {
  if (amps.rows() != n_sites() || amps.cols() != n_times()) {
    throw ConfigError("trace: amplitude grid shape mismatch");
  }
  for (int i = 1; i < n_times(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw ConfigError("trace: times must be strictly increasing");
    }
  }
}

SiteTimeTrace evolve(const ComplexMatrix& h_eff, const ComplexVector& beta0,
                     const std::vector<double>& t_grid) {
  if (h_eff.rows() != h_eff.cols() || h_eff.rows() != beta0.size()) {
    throw ConfigError("evolve: dimension mismatch");
  }
  if (t_grid.empty()) throw ConfigError("evolve: empty time grid");

  SiteTimeTrace trace;
  trace.times = t_grid;
  trace.sites.resize(static_cast<size_t>(beta0.size()));
  for (int i = 0; i < beta0.size(); ++i) trace.sites[i] = i;
  trace.amps.resize(beta0.size(), static_cast<Eigen::Index>(t_grid.size()));

  // Uniform grids reuse a single step propagator; arbitrary grids fall back to
  // one exponential per interval.
  ComplexVector beta = beta0;
  double t_prev = 0.0;
  ComplexMatrix step;
  double step_dt = -1.0;
  for (size_t i = 0; i < t_grid.size(); ++i) {
    const double dt = t_grid[i] - t_prev;
    if (dt < 0.0) throw ConfigError("evolve: time grid must be non-decreasing from 0");
    if (dt > 0.0) {
      if (std::abs(dt - step_dt) > 1e-15 * std::max(1.0, std::abs(dt))) {
        step = propagator(h_eff, dt);
        step_dt = dt;
      }
      beta = step * beta;
    }
    trace.amps.col(static_cast<Eigen::Index>(i)) = beta;
    t_prev = t_grid[i];
  }
  return trace;
}

SiteTimeTrace evolve(const lattice::LatticeModel& model, const ComplexVector& beta0,
                     const std::vector<double>& t_grid) {
  SiteTimeTrace trace = evolve(lattice::build_hamiltonian(model), beta0, t_grid);
  trace.sites = site_labels(model);
  return trace;
}

SiteTimeTrace run_sequence(const lattice::LatticeModel& model, const PulseSequence& seq,
                           double dt, const ComplexVector& beta0) {
  seq.validate();
  model.validate();
  if (!(dt > 0.0)) throw ConfigError("run_sequence: dt must be positive");

  const int n = model.n_sites;
  ComplexVector beta = beta0.size() == 0 ? ComplexVector::Zero(n) : ComplexVector(beta0);
  if (beta.size() != n) throw ConfigError("run_sequence: beta0 dimension mismatch");

  // The gap/excitation Hamiltonian keeps detuning and loss but no couplings.
  lattice::LatticeModel uncoupled = model;
  uncoupled.couplings.clear();

  int total_steps = 1;
  for (const auto& seg : seq.segments) total_steps += segment_steps(seg.duration, dt);

  SiteTimeTrace trace;
  trace.sites = site_labels(model);
  trace.times.resize(static_cast<size_t>(total_steps));
  trace.amps.resize(n, total_steps);
  trace.times[0] = 0.0;
  trace.amps.col(0) = beta;

  int col = 1;
  double t = 0.0;
  for (const auto& seg : seq.segments) {
    ComplexMatrix h;
    if (!seg.modulation_on) {
      h = lattice::build_hamiltonian(uncoupled);
    } else if (seg.mod_phase_offset != 0.0) {
      h = lattice::build_hamiltonian(lattice::with_modulation_phase(model, seg.mod_phase_offset));
    } else {
      h = lattice::build_hamiltonian(model);
    }

    const int steps = segment_steps(seg.duration, dt);
    if (seg.inputs.empty()) {
      const ComplexMatrix p = propagator(h, dt);
      for (int i = 0; i < steps; ++i) {
        beta = p * beta;
        t += dt;
        trace.times[static_cast<size_t>(col)] = t;
        trace.amps.col(col) = beta;
        ++col;
      }
    } else {
      const auto step = DrivenStep::make(h, drive_vector(model, seg.inputs), dt);
      for (int i = 0; i < steps; ++i) {
        beta = step.p * beta + step.w;
        t += dt;
        trace.times[static_cast<size_t>(col)] = t;
        trace.amps.col(col) = beta;
        ++col;
      }
    }
  }
  return trace;
}

SiteTimeTrace output_field(const lattice::LatticeModel& model, const PulseSequence& seq,
                           const SiteTimeTrace& state, double dt) {
  state.validate();
  SiteTimeTrace out = state;

  // beta_out = beta_in - sqrt(kappa_e) beta. Segment boundaries are resolved
  // in sample indices to match run_sequence's quantization exactly: segment s
  // owns columns (start, start + steps].
  ComplexMatrix beta_in = ComplexMatrix::Zero(state.amps.rows(), state.amps.cols());
  int start = 0;
  for (const auto& seg : seq.segments) {
    const int steps = segment_steps(seg.duration, dt);
    const int stop = std::min(start + steps, state.n_times() - 1);
    for (const auto& tone : seg.inputs) {
      const int row = state.row_of(tone.site);
      for (int c = start + 1; c <= stop; ++c) beta_in(row, c) = tone.amplitude;
    }
    start += steps;
  }
  for (int r = 0; r < state.n_sites(); ++r) {
    const double root_ke = std::sqrt(model.kappa_e[model.site_to_index(state.sites[r])]);
    out.amps.row(r) = beta_in.row(r) - root_ke * state.amps.row(r);
  }
  return out;
}

double bloch_period(double detuning) {
  if (detuning == 0.0) throw ConfigError("bloch_period: detuning must be nonzero");
  return kTwoPi / std::abs(detuning);
}

SiteTimeTrace bloch_oscillate(const lattice::LatticeModel& model, double detuning,
                              const ComplexVector& beta0, double t_max, double dt) {
  if (!(std::abs(detuning) > 0.0)) {
    throw ConfigError("bloch_oscillate: detuning must be nonzero");
  }
  const auto tilted = lattice::bloch_ladder(model, detuning);
  const int steps = segment_steps(t_max, dt);
  std::vector<double> grid(static_cast<size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) grid[static_cast<size_t>(i)] = i * dt;
  return evolve(tilted, beta0, grid);
}

double overlap_fidelity(const ComplexVector& a, const ComplexVector& b) {
  const double na = a.squaredNorm();
  const double nb = b.squaredNorm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::norm(a.dot(b)) / (na * nb);
}

ReversalResult time_reverse_protocol(const lattice::LatticeModel& model, double pulse_len,
                                     double gap, const ComplexVector& amplitudes,
                                     double dt) {
  if (!(pulse_len > 0.0) || !(gap > 0.0)) {
    throw ConfigError("time_reverse_protocol: pulse and gap durations must be > 0");
  }
  PulseSequence seq;
  seq.segments.push_back({pulse_len, true, 0.0, {}});
  seq.segments.push_back({gap, false, 0.0, {}});
  seq.segments.push_back({pulse_len, true, kPi, {}});

  ReversalResult result;
  result.even_coupling_warning = model.has_even_coupling();
  result.trace = run_sequence(model, seq, dt, amplitudes);
  result.fidelity =
      overlap_fidelity(amplitudes, result.trace.amps.col(result.trace.amps.cols() - 1));
  return result;
}

SiteTimeTrace trim_trace(const SiteTimeTrace& trace, double t_from, bool rebase) {
  trace.validate();
  int first = 0;
  while (first < trace.n_times() && trace.times[static_cast<size_t>(first)] < t_from) ++first;
  if (first >= trace.n_times()) throw ConfigError("trim_trace: nothing recorded after t_from");

  SiteTimeTrace out;
  out.sites = trace.sites;
  out.times.assign(trace.times.begin() + first, trace.times.end());
  if (rebase) {
    const double t0 = out.times.front();
    for (auto& t : out.times) t -= t0;
  }
  out.amps = trace.amps.rightCols(trace.n_times() - first);
  return out;
}

std::vector<double> centroid_trajectory(const SiteTimeTrace& trace) {
  std::vector<double> c(static_cast<size_t>(trace.n_times()), 0.0);
  for (int t = 0; t < trace.n_times(); ++t) {
    double w = 0.0;
    double acc = 0.0;
    for (int r = 0; r < trace.n_sites(); ++r) {
      const double p = std::norm(trace.amps(r, t));
      w += p;
      acc += p * trace.sites[static_cast<size_t>(r)];
    }
    c[static_cast<size_t>(t)] = w > 0.0 ? acc / w : 0.0;
  }
  return c;
}

}  // namespace synthlat::dynamics
