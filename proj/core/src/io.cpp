#include "synthlat/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "synthlat/constants.hpp"

namespace synthlat::io {

namespace {

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return doc;
}

const json& require(const json& doc, const std::string& key, const std::string& where) {
  if (!doc.contains(key)) throw ConfigError(where + ": missing required field '" + key + "'");
  return doc.at(key);
}

double require_number(const json& doc, const std::string& key, const std::string& where) {
  const json& v = require(doc, key, where);
  if (!v.is_number()) throw ConfigError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& doc, const std::string& key, double fallback) {
  if (!doc.contains(key)) return fallback;
  if (!doc.at(key).is_number()) throw ConfigError("field '" + key + "' must be a number");
  return doc.at(key).get<double>();
}

int int_or(const json& doc, const std::string& key, int fallback) {
  if (!doc.contains(key)) return fallback;
  if (!doc.at(key).is_number_integer()) throw ConfigError("field '" + key + "' must be an integer");
  return doc.at(key).get<int>();
}

bool bool_or(const json& doc, const std::string& key, bool fallback) {
  if (!doc.contains(key)) return fallback;
  if (!doc.at(key).is_boolean()) throw ConfigError("field '" + key + "' must be a boolean");
  return doc.at(key).get<bool>();
}

Complex complex_from(const json& v, const std::string& where) {
  if (v.is_number()) return Complex(v.get<double>(), 0.0);
  if (v.is_object()) {
    return Complex(number_or(v, "re", 0.0), number_or(v, "im", 0.0));
  }
  throw ConfigError(where + ": expected number or {re, im}");
}

/// Per-site rate list from a scalar (broadcast) or an array, Hz -> rad/s.
std::vector<double> rates_from(const json& v, const std::string& where) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(kTwoPi * v.get<double>());
  } else if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(where + ": rate entries must be numbers");
      out.push_back(kTwoPi * x.get<double>());
    }
  } else {
    throw ConfigError(where + ": expected number or array of numbers (Hz)");
  }
  return out;
}

}  // namespace

DeviceBundle device_from_json(const json& doc) {
  const std::string where = "device";
  const double omega_rt = kTwoPi * require_number(doc, "omega_rt_hz", where);
  const double a_ratio = require_number(doc, "a_ratio", where);
  const double b_ratio = require_number(doc, "b_ratio", where);
  const double z0 = number_or(doc, "z0_ohm", 50.0);
  const int n_squid = int_or(doc, "n_squid", 1);

  DeviceBundle bundle{
      device::DeviceParams::make(
          omega_rt, a_ratio, b_ratio, z0, n_squid, std::nullopt,
          doc.contains("phi_zp_scale")
              ? std::optional<double>(require_number(doc, "phi_zp_scale", where))
              : std::nullopt),
      {},
      std::nullopt};

  if (doc.contains("squid_array")) {
    const json& arr = doc.at("squid_array");
    for (const auto& x : require(arr, "lj0_nh", where)) {
      bundle.squids.lj0.push_back(x.get<double>() * 1e-9);
    }
    if (arr.contains("asymmetry")) {
      for (const auto& x : arr.at("asymmetry")) bundle.squids.d_n.push_back(x.get<double>());
    } else {
      bundle.squids.d_n.assign(bundle.squids.lj0.size(), 0.0);
    }
    if (arr.contains("eta0_rad")) {
      for (const auto& x : arr.at("eta0_rad")) bundle.squids.eta0.push_back(x.get<double>());
    }
  } else {
    // Uniform array consistent with the inductance ratio: total L_s0 = pi Z0 / (omega_rt A).
    const double total_lj0 = kPi * z0 / (omega_rt * a_ratio);
    const double d_sq2 = number_or(doc, "d_sq2", 0.0);
    bundle.squids = device::SquidArray::uniform(n_squid, total_lj0 / n_squid, std::sqrt(d_sq2));
  }
  bundle.squids.validate();

  if (doc.contains("tuning")) {
    const json& t = doc.at("tuning");
    device::TuningCalibration calib;
    calib.g_volt = kPi * require_number(t, "g_over_pi_per_volt", "device.tuning");
    calib.v_ss = require_number(t, "v_ss_volt", "device.tuning");
    calib.r_tot = number_or(t, "r_tot_ohm", 0.0);
    calib.mutual = number_or(t, "mutual_ph", 0.0) * 1e-12;
    bundle.tuning = calib;
  }
  return bundle;
}

DeviceBundle load_device(const std::filesystem::path& path) {
  return device_from_json(load_json_file(path));
}

device::FluxDrive drive_from_json(const json& doc) {
  device::FluxDrive drive;
  drive.f_dc = kPi * require_number(doc, "f_dc_phi0", "drive");
  drive.omega_mod = kTwoPi * number_or(doc, "omega_mod_hz", 0.0);
  if (doc.contains("harmonics")) {
    for (const auto& h : doc.at("harmonics")) {
      device::FluxHarmonic harmonic;
      harmonic.k = int_or(h, "k", 1);
      harmonic.amplitude = kPi * require_number(h, "amp_phi0", "drive.harmonics");
      harmonic.phase = number_or(h, "phase_rad", 0.0);
      drive.harmonics.push_back(harmonic);
    }
  }
  drive.validate();
  return drive;
}

namespace {

LatticeSection lattice_section_from(const json& doc) {
  LatticeSection sec;
  sec.center_mode = int_or(doc, "center_mode", 32);
  sec.sites_below = int_or(doc, "sites_below", 8);
  sec.sites_above = int_or(doc, "sites_above", 18);
  sec.kappa_e = rates_from(require(doc, "kappa_e_hz", "lattice"), "lattice.kappa_e_hz");
  sec.kappa_i = rates_from(require(doc, "kappa_i_hz", "lattice"), "lattice.kappa_i_hz");
  sec.include_static_shift = bool_or(doc, "include_static_shift", false);
  if (doc.contains("disorder")) {
    const json& d = doc.at("disorder");
    lattice::DisorderSpec spec;
    spec.seed = static_cast<std::uint64_t>(int_or(d, "seed", 0));
    spec.delta_sigma = kTwoPi * number_or(d, "delta_sigma_hz", 0.0);
    spec.kappa_spread = number_or(d, "kappa_spread", 0.0);
    if (d.contains("barriers")) {
      for (const auto& b : d.at("barriers")) {
        lattice::BarrierSite site;
        site.site = int_or(b, "site", 0);
        site.delta = kTwoPi * number_or(b, "delta_hz", 0.0);
        site.kappa_extra = kTwoPi * number_or(b, "kappa_extra_hz", 0.0);
        spec.barriers.push_back(site);
      }
    }
    sec.disorder = spec;
  }
  return sec;
}

ChannelSection channel_section_from(const json& doc) {
  ChannelSection sec;
  sec.t_out = number_or(doc, "t_out_ns", 0.0) * 1e-9;
  if (doc.contains("g_out")) {
    const json& g = doc.at("g_out");
    if (g.is_array()) {
      for (const auto& x : g) sec.g_out.push_back(complex_from(x, "channel.g_out"));
    } else {
      sec.g_out.push_back(complex_from(g, "channel.g_out"));
    }
  }
  if (doc.contains("jitter")) {
    const json& j = doc.at("jitter");
    sec.has_jitter = true;
    sec.jitter.seed = static_cast<std::uint64_t>(int_or(j, "seed", 0));
    sec.jitter.theta_rand = kPi * number_or(j, "theta_rand_pi", 0.0);
    sec.jitter.drift_rad_per_s = number_or(j, "drift_rad_per_s", 0.0);
    sec.jitter.shot_interval = number_or(j, "shot_interval_s", 0.0);
  }
  return sec;
}

}  // namespace

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  const json doc = load_json_file(path);
  ExperimentConfig config;
  config.base_dir = path.has_parent_path() ? path.parent_path() : ".";

  const json& dev = require(doc, "device", "experiment");
  if (dev.is_string()) {
    config.device = load_device(config.base_dir / dev.get<std::string>());
  } else {
    config.device = device_from_json(dev);
  }
  config.drive = drive_from_json(require(doc, "drive", "experiment"));
  config.lattice = lattice_section_from(require(doc, "lattice", "experiment"));
  if (doc.contains("channel")) config.channel = channel_section_from(doc.at("channel"));

  if (doc.contains("initial_state")) {
    const json& init = doc.at("initial_state");
    if (init.contains("wavepacket")) {
      const json& wp = init.at("wavepacket");
      analysis::WavepacketSpec spec;
      spec.sigma = require_number(wp, "sigma", "initial_state.wavepacket");
      spec.k_eff = kPi * require_number(wp, "k_eff_pi", "initial_state.wavepacket");
      spec.n_sites = int_or(wp, "n_sites", 5);
      spec.center = int_or(wp, "center", 0);
      config.initial_wavepacket = spec;
    }
    if (init.contains("sites")) {
      for (const auto& s : init.at("sites")) {
        const double amp = number_or(s, "amp", 1.0);
        const double phase = number_or(s, "phase_rad", 0.0);
        config.initial_sites.emplace_back(int_or(s, "site", 0), std::polar(amp, phase));
      }
    }
  }

  for (const auto& seg : require(doc, "sequence", "experiment")) {
    dynamics::Segment segment;
    segment.duration = require_number(seg, "duration_us", "sequence") * 1e-6;
    segment.modulation_on = bool_or(seg, "modulation_on", false);
    segment.mod_phase_offset = kPi * number_or(seg, "mod_phase_offset_pi", 0.0);
    if (seg.contains("inputs")) {
      for (const auto& tone : seg.at("inputs")) {
        dynamics::InputTone input;
        input.site = int_or(tone, "site", 0);
        input.amplitude = std::polar(number_or(tone, "amp", 1.0), number_or(tone, "phase_rad", 0.0));
        segment.inputs.push_back(input);
      }
    }
    config.sequence.segments.push_back(segment);
  }
  config.sequence.validate();

  config.sample_dt = number_or(doc, "sample_dt_ns", 2.0) * 1e-9;
  config.record_from = number_or(doc, "record_from_us", 0.0) * 1e-6;
  config.seed = static_cast<std::uint64_t>(int_or(doc, "seed", 0));
  if (doc.contains("output_dir")) config.output_dir = doc.at("output_dir").get<std::string>();
  if (doc.contains("analyses")) {
    for (const auto& a : doc.at("analyses")) {
      AnalysisRequest req;
      if (a.is_string()) {
        req.kind = a.get<std::string>();
      } else {
        req.kind = require(a, "kind", "analyses").get<std::string>();
        req.options = a;
      }
      config.analyses.push_back(req);
    }
  }
  return config;
}

BuiltExperiment build_experiment(const ExperimentConfig& config) {
  BuiltExperiment built;

  const int n_lo = config.lattice.center_mode - config.lattice.sites_below;
  const int n_hi = config.lattice.center_mode + config.lattice.sites_above;
  if (n_lo < 1) throw ConfigError("experiment: site window reaches below mode 1");

  built.spectrum = device::solve_mode_frequencies(config.device.params, config.device.squids,
                                                  config.drive.f_dc, n_lo, n_hi);
  int k_max = 0;
  for (const auto& h : config.drive.harmonics) k_max = std::max(k_max, h.k);
  built.coeffs =
      device::derive_drive_coefficients(config.device.squids, config.drive, k_max);

  lattice::FromDeviceOptions opts;
  opts.include_static_shift = config.lattice.include_static_shift;
  built.model = lattice::from_device(built.spectrum, built.coeffs, config.lattice.center_mode,
                                     config.lattice.sites_below, config.lattice.sites_above,
                                     config.drive.omega_mod, config.lattice.kappa_e,
                                     config.lattice.kappa_i, opts);
  if (config.lattice.disorder) {
    built.model = lattice::with_disorder(built.model, *config.lattice.disorder);
  }

  const int n_sites = built.model.n_sites;
  built.channel.t_out = config.channel.t_out;
  built.channel.omega_lab.resize(static_cast<size_t>(n_sites));
  const double omega0 = built.spectrum.omega_of(config.lattice.center_mode);
  for (int i = 0; i < n_sites; ++i) {
    built.channel.omega_lab[static_cast<size_t>(i)] =
        omega0 + built.model.index_to_site(i) * config.drive.omega_mod;
  }
  if (!config.channel.g_out.empty()) {
    built.channel.g_out.assign(static_cast<size_t>(n_sites), config.channel.g_out.front());
    if (config.channel.g_out.size() > 1) {
      if (config.channel.g_out.size() != static_cast<size_t>(n_sites)) {
        throw ConfigError("channel.g_out must be scalar or one entry per site");
      }
      built.channel.g_out = config.channel.g_out;
    }
  }
  return built;
}

ComplexVector initial_state(const ExperimentConfig& config,
                            const lattice::LatticeModel& model) {
  ComplexVector beta = ComplexVector::Zero(model.n_sites);
  if (config.initial_wavepacket) {
    std::vector<int> sites(static_cast<size_t>(model.n_sites));
    for (int i = 0; i < model.n_sites; ++i) sites[static_cast<size_t>(i)] = model.index_to_site(i);
    // The configured k_eff is the gauge-invariant quasimomentum k + arg(J);
    // the on-chip phase gradient absorbs the modulation phase.
    analysis::WavepacketSpec spec = *config.initial_wavepacket;
    auto nn = model.couplings.find(1);
    if (nn != model.couplings.end()) {
      const int bond = std::min<int>(model.origin_index,
                                     static_cast<int>(nn->second.size()) - 1);
      spec.k_eff -= std::arg(nn->second[static_cast<size_t>(bond)]);
    }
    beta = analysis::make_wavepacket(spec, sites);
  }
  for (const auto& [site, amp] : config.initial_sites) {
    beta[model.site_to_index(site)] += amp;
  }
  return beta;
}

json lattice_to_json(const lattice::LatticeModel& model) {
  json doc;
  doc["n_sites"] = model.n_sites;
  doc["n_abs_offset"] = model.n_abs_offset;
  doc["origin_index"] = model.origin_index;
  doc["delta_rad_s"] = model.delta;
  doc["kappa_e_rad_s"] = model.kappa_e;
  doc["kappa_i_rad_s"] = model.kappa_i;
  json couplings = json::object();
  for (const auto& [k, arr] : model.couplings) {
    json pairs = json::array();
    for (const auto& j : arr) pairs.push_back({j.real(), j.imag()});
    couplings[std::to_string(k)] = pairs;
  }
  doc["couplings_rad_s"] = couplings;
  return doc;
}

lattice::LatticeModel lattice_from_json(const json& doc) {
  lattice::LatticeModel model;
  model.n_sites = require(doc, "n_sites", "lattice json").get<int>();
  model.n_abs_offset = int_or(doc, "n_abs_offset", 0);
  model.origin_index = int_or(doc, "origin_index", 0);
  model.delta = require(doc, "delta_rad_s", "lattice json").get<std::vector<double>>();
  model.kappa_e = require(doc, "kappa_e_rad_s", "lattice json").get<std::vector<double>>();
  model.kappa_i = require(doc, "kappa_i_rad_s", "lattice json").get<std::vector<double>>();
  if (doc.contains("couplings_rad_s")) {
    for (const auto& [key, arr] : doc.at("couplings_rad_s").items()) {
      std::vector<Complex> js;
      for (const auto& pair : arr) js.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
      model.couplings[std::stoi(key)] = js;
    }
  }
  model.validate();
  return model;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_trace_csv(const std::filesystem::path& path,
                     const dynamics::SiteTimeTrace& trace) {
  trace.validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "t_s,site,re,im\n";
  for (int t = 0; t < trace.n_times(); ++t) {
    for (int r = 0; r < trace.n_sites(); ++r) {
      out << format_double(trace.times[static_cast<size_t>(t)]) << ','
          << trace.sites[static_cast<size_t>(r)] << ','
          << format_double(trace.amps(r, t).real()) << ','
          << format_double(trace.amps(r, t).imag()) << '\n';
    }
  }
}

dynamics::SiteTimeTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> times;
  std::vector<int> sites;
  std::vector<Complex> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    const double t = std::stod(cell);
    std::getline(row, cell, ',');
    const int site = std::stoi(cell);
    std::getline(row, cell, ',');
    const double re = std::stod(cell);
    std::getline(row, cell, ',');
    const double im = std::stod(cell);
    if (times.empty() || t > times.back()) times.push_back(t);
    if (times.size() == 1) sites.push_back(site);
    values.emplace_back(re, im);
  }
  dynamics::SiteTimeTrace trace;
  trace.times = times;
  trace.sites = sites;
  trace.amps.resize(static_cast<Eigen::Index>(sites.size()),
                    static_cast<Eigen::Index>(times.size()));
  size_t idx = 0;
  for (size_t t = 0; t < times.size(); ++t) {
    for (size_t r = 0; r < sites.size(); ++r) {
      trace.amps(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = values.at(idx++);
    }
  }
  trace.validate();
  return trace;
}

void write_spectra_csv(const std::filesystem::path& path,
                       const scattering::ScatteringResult& result,
                       const std::vector<int>& site_labels) {
  result.validate();
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "omega_hz,out_site,in_site,re,im\n";
  for (size_t f = 0; f < result.omega_grid.size(); ++f) {
    const auto& s = result.s[f];
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      for (Eigen::Index c = 0; c < s.cols(); ++c) {
        out << format_double(result.omega_grid[f] / kTwoPi) << ','
            << site_labels.at(static_cast<size_t>(r)) << ','
            << site_labels.at(static_cast<size_t>(c)) << ','
            << format_double(s(r, c).real()) << ',' << format_double(s(r, c).imag()) << '\n';
      }
    }
  }
}

void write_dispersion_csv(const std::filesystem::path& path,
                          const analysis::DispersionResult& result) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "k_rad,omega_hz,power\n";
  for (Eigen::Index q = 0; q < result.power.rows(); ++q) {
    for (Eigen::Index f = 0; f < result.power.cols(); ++f) {
      out << format_double(result.k_grid[static_cast<size_t>(q)]) << ','
          << format_double(result.omega_grid[static_cast<size_t>(f)] / kTwoPi) << ','
          << format_double(result.power(q, f)) << '\n';
    }
  }
}

json dispersion_fit_json(const analysis::DispersionResult& result) {
  json doc;
  doc["model"] = "nn";
  doc["j_fit_hz"] = result.fit.j_mag / kTwoPi;
  doc["theta_mod_rad"] = result.fit.theta_mod;
  doc["rms_residual_hz"] = result.fit.rms_residual / kTwoPi;
  doc["ridge_ambiguous"] = result.ridge_ambiguous;
  json ridge = json::array();
  for (const auto& [k, w] : result.ridge) ridge.push_back({k, w / kTwoPi});
  doc["ridge_k_hz"] = ridge;
  return doc;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot hash " + path.string());
  std::uint64_t hash = 1469598103934665603ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ull;
    }
    if (!in) break;
  }
  return hash;
}

void ManifestWriter::add(const std::filesystem::path& artifact) {
  artifacts_.push_back(artifact);
}

void ManifestWriter::write(const std::filesystem::path& manifest_path) const {
  std::vector<std::filesystem::path> sorted = artifacts_;
  std::sort(sorted.begin(), sorted.end());
  json doc;
  doc["artifacts"] = json::array();
  for (const auto& p : sorted) {
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(p)));
    doc["artifacts"].push_back({{"path", p.filename().string()},
                                {"bytes", std::filesystem::file_size(p)},
                                {"fnv1a64", hash}});
  }
  std::ofstream out(manifest_path);
  if (!out) throw ConfigError("cannot write " + manifest_path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace synthlat::io
