// synthlat: batch front-end for the synthetic-frequency-lattice simulator.
// Subcommands load experiment JSON, run the requested simulation or analysis
// and write CSV/JSON/SVG artifacts plus a hash manifest.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "synthlat/analysis.hpp"
#include "synthlat/common.hpp"
#include "synthlat/device.hpp"
#include "synthlat/dynamics.hpp"
#include "synthlat/io.hpp"
#include "synthlat/lattice.hpp"
#include "synthlat/scattering.hpp"
#include "synthlat/signal_chain.hpp"
#include "synthlat/svg.hpp"

namespace fs = std::filesystem;
using namespace synthlat;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

/// Parses "0.5pi" / "-0.78pi" / plain radians.
double parse_angle(const std::string& text) {
  if (text.size() > 2 && text.substr(text.size() - 2) == "pi") {
    return kPi * std::stod(text.substr(0, text.size() - 2));
  }
  return std::stod(text);
}

/// Parses durations with us/ns/ms/s suffixes into seconds.
double parse_duration(const std::string& text) {
  auto ends_with = [&](const char* suffix) {
    const std::string s(suffix);
    return text.size() > s.size() && text.substr(text.size() - s.size()) == s;
  };
  if (ends_with("ns")) return 1e-9 * std::stod(text.substr(0, text.size() - 2));
  if (ends_with("us")) return 1e-6 * std::stod(text.substr(0, text.size() - 2));
  if (ends_with("ms")) return 1e-3 * std::stod(text.substr(0, text.size() - 2));
  if (ends_with("s")) return std::stod(text.substr(0, text.size() - 1));
  return 1e-6 * std::stod(text);  // bare numbers are microseconds
}

struct RunContext {
  io::ExperimentConfig config;
  io::BuiltExperiment built;
  fs::path out_dir;
  io::ManifestWriter manifest;

  void emit(const fs::path& path) { manifest.add(path); }
  void finish() { manifest.write(out_dir / "manifest.json"); }
};

RunContext open_experiment(const std::string& config_path, const std::string& out_override) {
  RunContext ctx;
  ctx.config = io::load_experiment(config_path);
  ctx.built = io::build_experiment(ctx.config);
  ctx.out_dir = out_override.empty() ? fs::path(ctx.config.output_dir) : fs::path(out_override);
  fs::create_directories(ctx.out_dir);
  return ctx;
}

struct SimulatedTraces {
  dynamics::SiteTimeTrace full;     ///< whole sequence from t = 0
  dynamics::SiteTimeTrace record;   ///< samples past record_from (artifact view)
};

SimulatedTraces simulate_trace(const RunContext& ctx) {
  const ComplexVector beta0 = io::initial_state(ctx.config, ctx.built.model);
  SimulatedTraces traces;
  traces.full = dynamics::run_sequence(ctx.built.model, ctx.config.sequence,
                                       ctx.config.sample_dt, beta0);
  traces.record = ctx.config.record_from > 0.0
                      ? dynamics::trim_trace(traces.full, ctx.config.record_from)
                      : traces.full;
  return traces;
}

/// Forward measurement chain -> reference correction -> dispersion extraction,
/// mirroring the raster readout processing.
analysis::DispersionResult dispersion_pipeline(const RunContext& ctx,
                                               const dynamics::SiteTimeTrace& trace) {
  const auto& channel = ctx.built.channel;
  dynamics::SiteTimeTrace measured =
      signal_chain::apply_channel(trace, ctx.built.model, channel, ctx.config.channel.jitter);
  if (ctx.config.channel.has_jitter) {
    const auto reference = signal_chain::jitter_reference(measured, ctx.config.channel.jitter);
    measured = signal_chain::phase_reference_correct(measured, reference);
  }
  return analysis::extract_dispersion(measured, ctx.built.model, channel);
}

void write_json(const fs::path& path, const io::json& doc) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
  RunContext ctx = open_experiment(config_path, out_override);
  const auto trace = simulate_trace(ctx);

  // Default artifact set when the config requests nothing explicit.
  std::vector<io::AnalysisRequest> requests = ctx.config.analyses;
  if (requests.empty()) requests.push_back({"trace_csv", {}});

  for (const auto& req : requests) {
    if (req.kind == "trace_csv") {
      const fs::path p = ctx.out_dir / "trace.csv";
      io::write_trace_csv(p, trace);
      ctx.emit(p);
    } else if (req.kind == "output_csv") {
      const fs::path p = ctx.out_dir / "output.csv";
      io::write_trace_csv(p, dynamics::output_field(ctx.built.model, ctx.config.sequence,
                                                    trace, ctx.config.sample_dt));
      ctx.emit(p);
    } else if (req.kind == "heatmap_svg") {
      const fs::path p = ctx.out_dir / "trace.svg";
      svg::HeatmapOptions opts;
      opts.title = "site amplitudes";
      svg::write_trace_heatmap(p, trace, opts);
      ctx.emit(p);
    } else if (req.kind == "dispersion") {
      const auto result = dispersion_pipeline(ctx, trace);
      const fs::path pcsv = ctx.out_dir / "dispersion.csv";
      io::write_dispersion_csv(pcsv, result);
      ctx.emit(pcsv);
      const fs::path pjson = ctx.out_dir / "dispersion_fit.json";
      write_json(pjson, io::dispersion_fit_json(result));
      ctx.emit(pjson);
    } else if (req.kind == "dispersion_svg") {
      const auto result = dispersion_pipeline(ctx, trace);
      const fs::path p = ctx.out_dir / "dispersion.svg";
      svg::HeatmapOptions opts;
      opts.title = "dispersion power map";
      svg::write_matrix_heatmap(p, result.power, result.k_grid, result.omega_grid, opts);
      ctx.emit(p);
    } else if (req.kind == "lattice_json") {
      const fs::path p = ctx.out_dir / "lattice.json";
      write_json(p, io::lattice_to_json(ctx.built.model));
      ctx.emit(p);
    } else {
      throw ConfigError("unknown analysis kind '" + req.kind + "'");
    }
  }
  ctx.finish();
  std::cout << "wrote " << (ctx.out_dir / "manifest.json").string() << "\n";
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_override,
                 bool with_svg) {
  RunContext ctx = open_experiment(config_path, out_override);
  const auto trace = simulate_trace(ctx);
  const fs::path p = ctx.out_dir / "trace.csv";
  io::write_trace_csv(p, trace);
  ctx.emit(p);
  if (with_svg) {
    const fs::path s = ctx.out_dir / "trace.svg";
    svg::write_trace_heatmap(s, trace);
    ctx.emit(s);
  }
  ctx.finish();
  std::cout << "trace: " << p.string() << " (" << trace.n_sites() << " sites x "
            << trace.n_times() << " samples)\n";
  return 0;
}

int cmd_scatter(const std::string& config_path, const std::string& out_override,
                const std::string& kind, double span_mhz, int points) {
  RunContext ctx = open_experiment(config_path, out_override);
  const auto grid = scattering::make_omega_grid(0.0, kTwoPi * span_mhz * 1e6, points);
  const auto result = kind == "steady" ? scattering::steady_state_s(ctx.built.model, grid)
                                       : scattering::transient_s(ctx.built.model, grid);
  std::vector<int> labels(static_cast<size_t>(ctx.built.model.n_sites));
  for (int i = 0; i < ctx.built.model.n_sites; ++i) {
    labels[static_cast<size_t>(i)] = ctx.built.model.index_to_site(i);
  }
  const fs::path p = ctx.out_dir / (kind == "steady" ? "s_steady.csv" : "s_transient.csv");
  io::write_spectra_csv(p, result, labels);
  ctx.emit(p);
  ctx.finish();
  std::cout << "spectra: " << p.string() << "\n";
  return 0;
}

int cmd_dispersion(const std::string& config_path, const std::string& out_override) {
  RunContext ctx = open_experiment(config_path, out_override);
  const auto trace = simulate_trace(ctx);
  const auto result = dispersion_pipeline(ctx, trace);

  const fs::path pcsv = ctx.out_dir / "dispersion.csv";
  io::write_dispersion_csv(pcsv, result);
  ctx.emit(pcsv);
  const fs::path pjson = ctx.out_dir / "dispersion_fit.json";
  write_json(pjson, io::dispersion_fit_json(result));
  ctx.emit(pjson);
  ctx.finish();

  std::printf("|J_fit|/2pi = %.6g MHz, theta_mod = %.4f rad%s\n",
              result.fit.j_mag / kTwoPi / 1e6, result.fit.theta_mod,
              result.ridge_ambiguous ? " (ridge ambiguous)" : "");
  return 0;
}

int cmd_fit_tuning(const std::string& data_path, int mode_n,
                   const std::string& device_path, const std::string& out_override) {
  // Data: CSV rows "v_volt,omega_hz" (header optional).
  std::ifstream in(data_path);
  if (!in) throw ConfigError("cannot open " + data_path);
  std::vector<std::pair<double, double>> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    samples.emplace_back(std::stod(line.substr(0, comma)),
                         kTwoPi * std::stod(line.substr(comma + 1)));
  }

  const io::DeviceBundle device = io::load_device(device_path);
  if (!device.tuning) throw ConfigError("fit-tuning: device file lacks a tuning block");
  analysis::TuningFitGuess guess{device.tuning->g_volt, device.tuning->v_ss,
                                 device.params.omega_rt, device.params.a_ratio,
                                 device.params.b_ratio, device.squids.d_sq2()};
  const auto fit = analysis::fit_tuning(samples, mode_n, guess);

  io::json doc;
  doc["g_over_pi_per_volt"] = fit.g_volt / kPi;
  doc["v_ss_volt"] = fit.v_ss;
  doc["omega_rt_hz"] = fit.omega_rt / kTwoPi;
  doc["a_ratio"] = fit.a_ratio;
  doc["b_ratio"] = fit.b_ratio;
  doc["d_sq2"] = fit.d_sq2;
  doc["degenerate_b_dsq2"] = fit.degenerate_b_dsq;
  doc["iterations"] = fit.iterations;

  if (!out_override.empty()) {
    fs::create_directories(out_override);
    write_json(fs::path(out_override) / "tuning_fit.json", doc);
  }
  std::cout << doc.dump(2) << "\n";
  if (fit.degenerate_b_dsq) {
    std::cout << "note: B and d_sq2 are not well constrained by this data\n";
  }
  return 0;
}

int cmd_calibrate(const std::string& config_path, const std::string& out_override,
                  std::vector<int> pair_sites, double t_probe_us, int sweep_points) {
  RunContext ctx = open_experiment(config_path, out_override);
  if (pair_sites.empty()) {
    for (int i = 0; i + 1 < ctx.built.model.n_sites; ++i) {
      pair_sites.push_back(ctx.built.model.index_to_site(i));
    }
  }
  std::vector<double> sweep(static_cast<size_t>(sweep_points));
  for (int i = 0; i < sweep_points; ++i) {
    sweep[static_cast<size_t>(i)] = -kPi + kTwoPi * i / sweep_points;
  }
  const auto result = analysis::calibrate_phases(ctx.built.model, pair_sites, sweep,
                                                 t_probe_us * 1e-6);

  io::json doc;
  doc["pairs"] = io::json::array();
  for (size_t i = 0; i < result.pair_lower_site.size(); ++i) {
    doc["pairs"].push_back({{"lower_site", result.pair_lower_site[i]},
                            {"theta_calib_rad", result.theta_calib[i]},
                            {"contrast", result.contrast[i]},
                            {"r_scale", result.r_scale[i]},
                            {"weak_contrast", static_cast<bool>(result.weak_contrast[i])}});
  }
  const fs::path p = ctx.out_dir / "calibration.json";
  write_json(p, doc);
  ctx.emit(p);
  ctx.finish();
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_bloch(const std::string& config_path, const std::string& out_override,
              double detuning_mhz, double t_max_us) {
  RunContext ctx = open_experiment(config_path, out_override);
  const double detuning = kTwoPi * detuning_mhz * 1e6;
  const ComplexVector beta0 = io::initial_state(ctx.config, ctx.built.model);
  const auto trace = dynamics::bloch_oscillate(ctx.built.model, detuning, beta0,
                                               t_max_us * 1e-6, ctx.config.sample_dt);
  const fs::path p = ctx.out_dir / "bloch_trace.csv";
  io::write_trace_csv(p, trace);
  ctx.emit(p);
  ctx.finish();
  std::printf("T_B = %.6g ns (detuning %.6g MHz), trace: %s\n",
              dynamics::bloch_period(detuning) * 1e9, detuning_mhz, p.string().c_str());
  return 0;
}

int cmd_defect(double delta_over_j, const std::string& keff_text, double theta_j) {
  const double k_eff = parse_angle(keff_text);
  // Work in units of |J| = 1; the amplitudes depend only on delta / v_g.
  const Complex j = std::polar(1.0, theta_j);
  const auto result = analysis::defect_scattering(delta_over_j, j, k_eff - theta_j);
  std::printf("|A_r|^2 = %.6g, |A_t|^2 = %.6g (v_g = %.6g |J| sites/rad, delta/v_g = %.6g)\n",
              std::norm(result.a_r), std::norm(result.a_t), result.v_g,
              result.v_g != 0.0 ? result.delta / result.v_g : INFINITY);
  return 0;
}

int cmd_reverse(const std::string& config_path, const std::string& out_override,
                const std::string& pulse_text, const std::string& gap_text) {
  RunContext ctx = open_experiment(config_path, out_override);
  ComplexVector beta0 = io::initial_state(ctx.config, ctx.built.model);
  if (beta0.norm() == 0.0) {
    beta0[ctx.built.model.site_to_index(0)] = 1.0;  // default single-site start
  }
  const auto result = dynamics::time_reverse_protocol(
      ctx.built.model, parse_duration(pulse_text), parse_duration(gap_text), beta0,
      ctx.config.sample_dt);
  const fs::path p = ctx.out_dir / "reverse_trace.csv";
  io::write_trace_csv(p, result.trace);
  ctx.emit(p);
  ctx.finish();
  std::printf("revival fidelity = %.9f%s\n", result.fidelity,
              result.even_coupling_warning
                  ? " (warning: even-distance couplings are not reversed by the phase flip)"
                  : "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic frequency-lattice simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, kind = "transient", keff_text = "0.5pi";
  std::string data_path, device_path, pulse_text = "0.15us", gap_text = "0.5us";
  std::string pairs_text;
  bool with_svg = false;
  double span_mhz = 4.0, t_probe_us = 0.1, detuning_mhz = 3.0, t_max_us = 1.0;
  double delta_over_j = 1.0, theta_j = 0.0;
  int points = 801, mode_n = 32, sweep_points = 24;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment JSON")->required();
    cmd->add_option("--out", out_dir, "output directory override");
  };

  auto* run = app.add_subcommand("run", "run a full experiment config");
  add_config(run);

  auto* simulate = app.add_subcommand("simulate", "pulse-sequence simulation to CSV");
  add_config(simulate);
  simulate->add_flag("--svg", with_svg, "also write a heatmap SVG");

  auto* scatter = app.add_subcommand("scatter", "frequency-domain scattering matrices");
  add_config(scatter);
  scatter->add_option("--kind", kind, "steady | transient")
      ->check(CLI::IsMember({"steady", "transient"}));
  scatter->add_option("--span-mhz", span_mhz, "half span of the grid (MHz)");
  scatter->add_option("--points", points, "grid points");

  auto* dispersion = app.add_subcommand("dispersion", "simulate and extract the band");
  add_config(dispersion);

  auto* fit_tuning = app.add_subcommand("fit-tuning", "fit flux-tuning samples");
  fit_tuning->add_option("--data", data_path, "CSV of v_volt,omega_hz")->required();
  fit_tuning->add_option("--mode", mode_n, "mode number of the samples");
  fit_tuning->add_option("--device", device_path, "device JSON providing the initial guess")
      ->required();
  fit_tuning->add_option("--out", out_dir, "output directory");

  auto* calibrate = app.add_subcommand("calibrate", "pairwise interference phase calibration");
  add_config(calibrate);
  calibrate->add_option("--pairs", pairs_text, "comma-separated lower sites (default all)");
  calibrate->add_option("--t-probe-us", t_probe_us, "probe time (us)");
  calibrate->add_option("--points", sweep_points, "sweep points");

  auto* bloch = app.add_subcommand("bloch", "detuned-modulation evolution");
  add_config(bloch);
  bloch->add_option("--detuning-mhz", detuning_mhz, "ladder slope (MHz per site)");
  bloch->add_option("--t-max-us", t_max_us, "duration (us)");

  auto* defect = app.add_subcommand("defect", "elastic scattering off a detuned site");
  defect->add_option("--delta-over-j", delta_over_j, "defect detuning in units of |J|");
  defect->add_option("--keff", keff_text, "incident k_eff, e.g. 0.5pi");
  defect->add_option("--theta-j", theta_j, "coupling phase (rad)");

  auto* reverse = app.add_subcommand("reverse", "pulse / gap / phase-flipped pulse echo");
  add_config(reverse);
  reverse->add_option("--pulse", pulse_text, "pulse duration, e.g. 0.15us");
  reverse->add_option("--gap", gap_text, "gap duration, e.g. 0.5us");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (simulate->parsed()) return cmd_simulate(config_path, out_dir, with_svg);
    if (scatter->parsed()) return cmd_scatter(config_path, out_dir, kind, span_mhz, points);
    if (dispersion->parsed()) return cmd_dispersion(config_path, out_dir);
    if (fit_tuning->parsed()) return cmd_fit_tuning(data_path, mode_n, device_path, out_dir);
    if (calibrate->parsed()) {
      std::vector<int> pairs;
      std::stringstream ss(pairs_text);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) pairs.push_back(std::stoi(tok));
      }
      return cmd_calibrate(config_path, out_dir, pairs, t_probe_us, sweep_points);
    }
    if (bloch->parsed()) return cmd_bloch(config_path, out_dir, detuning_mhz, t_max_us);
    if (defect->parsed()) return cmd_defect(delta_over_j, keff_text, theta_j);
    if (reverse->parsed()) return cmd_reverse(config_path, out_dir, pulse_text, gap_text);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
