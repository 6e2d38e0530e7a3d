#include "synthlat/signal_chain.hpp"

#include <cmath>
#include <random>

namespace synthlat::signal_chain {

double JitterModel::shot_phase(int shot_index) const {
  double phase = drift_rad_per_s * shot_interval * shot_index;
  if (theta_rand > 0.0) {
    // Independent draw per shot, reproducible and order-independent.
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(shot_index + 1));
    std::uniform_real_distribution<double> uni(-theta_rand, theta_rand);
    phase += uni(rng);
  }
  return phase;
}

dynamics::SiteTimeTrace apply_channel(const dynamics::SiteTimeTrace& trace,
                                      const lattice::LatticeModel& model,
                                      const scattering::ChannelModel& channel,
                                      const JitterModel& jitter) {
  trace.validate();
  dynamics::SiteTimeTrace out = trace;
  for (int r = 0; r < trace.n_sites(); ++r) {
    const int site = trace.sites[static_cast<size_t>(r)];
    const int idx = model.site_to_index(site);
    const double root_ke = std::sqrt(model.kappa_e[idx]);
    const Complex gain = -root_ke * channel.out_gain(idx) *
                         std::polar(1.0, channel.lab_frequency(idx) * channel.t_out +
                                             jitter.shot_phase(r));
    out.amps.row(r) *= gain;
  }
  return out;
}

dynamics::SiteTimeTrace jitter_reference(const dynamics::SiteTimeTrace& like,
                                         const JitterModel& jitter) {
  dynamics::SiteTimeTrace ref = like;
  for (int r = 0; r < ref.n_sites(); ++r) {
    ref.amps.row(r).setConstant(std::polar(1.0, jitter.shot_phase(r)));
  }
  return ref;
}

dynamics::SiteTimeTrace phase_reference_correct(const dynamics::SiteTimeTrace& trace_a,
                                                const dynamics::SiteTimeTrace& trace_b_reference,
                                                double amplitude_threshold) {
  trace_a.validate();
  if (trace_b_reference.n_sites() != trace_a.n_sites() ||
      trace_b_reference.n_times() != trace_a.n_times()) {
    throw ConfigError("phase correction: reference grid mismatch");
  }
  dynamics::SiteTimeTrace out = trace_a;
  for (int r = 0; r < trace_a.n_sites(); ++r) {
    const Complex mean = trace_b_reference.amps.row(r).mean();
    if (std::abs(mean) < amplitude_threshold) {
      throw NumericalError("phase correction: reference amplitude below threshold at row " +
                           std::to_string(r));
    }
    out.amps.row(r) *= std::polar(1.0, -std::arg(mean));
  }
  return out;
}

dynamics::SiteTimeTrace smooth(const dynamics::SiteTimeTrace& trace, int window) {
  trace.validate();
  if (window < 1) throw ConfigError("smooth: window must be >= 1");
  if (window == 1) return trace;

  dynamics::SiteTimeTrace out = trace;
  const int n_t = trace.n_times();
  for (int r = 0; r < trace.n_sites(); ++r) {
    Complex acc(0.0, 0.0);
    for (int t = 0; t < n_t; ++t) {
      acc += trace.amps(r, t);
      if (t >= window) acc -= trace.amps(r, t - window);
      out.amps(r, t) = acc / double(std::min(window, t + 1));
    }
  }
  return out;
}

}  // namespace synthlat::signal_chain
