#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synthlat/analysis.hpp"
#include "synthlat/common.hpp"
#include "synthlat/device.hpp"
#include "synthlat/dynamics.hpp"
#include "synthlat/lattice.hpp"
#include "synthlat/scattering.hpp"
#include "synthlat/signal_chain.hpp"

namespace synthlat::io {

using json = nlohmann::json;

/// Device document: circuit constants, SQUID array and optional tuning map.
struct DeviceBundle {
  device::DeviceParams params;
  device::SquidArray squids;
  std::optional<device::TuningCalibration> tuning;
};

DeviceBundle device_from_json(const json& doc);
DeviceBundle load_device(const std::filesystem::path& path);

device::FluxDrive drive_from_json(const json& doc);

struct LatticeSection {
  int center_mode = 32;
  int sites_below = 8;
  int sites_above = 18;
  std::vector<double> kappa_e;  ///< rad/s; single entry broadcasts
  std::vector<double> kappa_i;
  bool include_static_shift = false;
  std::optional<lattice::DisorderSpec> disorder;
};

struct ChannelSection {
  double t_out = 0.0;
  std::vector<Complex> g_out;  ///< empty = unity; single entry broadcasts
  signal_chain::JitterModel jitter;
  bool has_jitter = false;
};

struct AnalysisRequest {
  std::string kind;
  json options;
};

/// One batch experiment: device + drive + lattice window + sequence + outputs.
struct ExperimentConfig {
  std::filesystem::path base_dir;
  DeviceBundle device;
  device::FluxDrive drive;
  LatticeSection lattice;
  ChannelSection channel;
  std::optional<analysis::WavepacketSpec> initial_wavepacket;
  std::vector<std::pair<int, Complex>> initial_sites;
  dynamics::PulseSequence sequence;
  double sample_dt = dynamics::kDefaultSampleDt;
  double record_from = 0.0;  ///< artifacts keep samples with t >= record_from
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::vector<AnalysisRequest> analyses;
};

ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Everything the pipelines need, assembled from a config.
struct BuiltExperiment {
  device::ModeSpectrum spectrum;
  std::vector<device::DriveCoefficient> coeffs;
  lattice::LatticeModel model;
  scattering::ChannelModel channel;
};

BuiltExperiment build_experiment(const ExperimentConfig& config);

ComplexVector initial_state(const ExperimentConfig& config,
                            const lattice::LatticeModel& model);

// --- serialization -------------------------------------------------------

json lattice_to_json(const lattice::LatticeModel& model);
lattice::LatticeModel lattice_from_json(const json& doc);

/// Fixed "%.17g" rendering; round-trips doubles and keeps artifacts
/// byte-stable across runs.
std::string format_double(double value);

void write_trace_csv(const std::filesystem::path& path,
                     const dynamics::SiteTimeTrace& trace);
dynamics::SiteTimeTrace read_trace_csv(const std::filesystem::path& path);

void write_spectra_csv(const std::filesystem::path& path,
                       const scattering::ScatteringResult& result,
                       const std::vector<int>& site_labels);

void write_dispersion_csv(const std::filesystem::path& path,
                          const analysis::DispersionResult& result);
json dispersion_fit_json(const analysis::DispersionResult& result);

std::uint64_t fnv1a64_file(const std::filesystem::path& path);

/// Collects emitted artifacts and writes a manifest with content hashes,
/// sorted by path.
class ManifestWriter {
public:
  void add(const std::filesystem::path& artifact);
  void write(const std::filesystem::path& manifest_path) const;

private:
  std::vector<std::filesystem::path> artifacts_;
};

}  // namespace synthlat::io
