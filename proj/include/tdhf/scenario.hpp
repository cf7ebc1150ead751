#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdhf/coulomb.hpp"
#include "tdhf/em_sources.hpp"
#include "tdhf/engine.hpp"
#include "tdhf/observables.hpp"

namespace tdhf {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kCodeVersion = "tdhf 1.0.0";

/// One electron of the configuration, internal units.
struct ElectronConfig {
  Vec2 center;
  double fwhm_long = 0.0;
  double fwhm_trans = 0.0;
  double kinetic_energy = 0.0;
  Vec2 direction{1.0, 0.0};
  Spin spin = Spin::Up;
  std::string label;
  /// Distance from the rod surface, when the centre was given that way.
  std::optional<double> impact_parameter;
};

struct ObservablesConfig {
  double acceptance = 0.0;
  double energy_bin = 0.0;
  /// Half-width of the spectrum window around each electron's energy.
  double energy_span = 0.0;
  int angle_bins = 16;
  int momentum_pad = 1;
  std::vector<Space> slices;
  bool store_orbitals = true;
  /// Visibility band relative to each electron's energy, in photon energies.
  double band_lo = 0.5;
  double band_hi = 5.5;
  /// Number of gain peaks averaged for the reported peak visibility.
  int visibility_peaks = 5;
};

/// Parsed and unit-converted run configuration (atomic units inside).
struct RunConfig {
  std::string name;
  GridSpec grid;
  std::vector<ElectronConfig> electrons;
  SpinMode spin_mode = SpinMode::Polarized;

  bool laser_enabled = false;
  LaserPulse laser;
  bool rod_enabled = false;
  NanorodGeometry rod;
  DrudeMetal metal;
  /// Precomputed field frames replacing the analytic laser and rod.
  std::optional<std::filesystem::path> field_series;

  double confinement = 0.0;
  ZeroMode zero_mode = ZeroMode::ImageFree;
  double interaction_scale = 1.0;
  bool exchange = true;

  double t_start = 0.0;
  PropagatorConfig propagation;
  /// Alternative to propagation.snapshot_stride: number of snapshot intervals.
  int snapshot_count = 0;
  bool orthogonalize = false;

  ObservablesConfig observables;
  std::filesystem::path output_dir;

  /// The JSON this was parsed from (after overrides), echoed into the manifest.
  nlohmann::json source;

  /// Photon angular frequency, or 0 without a laser.
  double photon_omega() const;
};

/// Applies "dotted.path=value" to a JSON document. The value is parsed as
/// JSON when possible and taken as a string otherwise. Array elements are
/// addressed by index. Throws ConfigError for a malformed assignment or a
/// path through a missing or non-container node.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Schema check and conversion. Messages name the offending field, e.g.
/// "electrons[1].kinetic_energy_eV: required field missing". Cross-field
/// checks: packets inside the domain, a positive stable dt, and w / v inside
/// the momentum grid when a laser is present.
RunConfig parse_config(const nlohmann::json& doc);
/// Reads a UTF-8 JSON file; IoError if unreadable, ConfigError if invalid.
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Preset names, each available as "<name>_desk" and "<name>_paper"; the bare
/// name means the desk size.
std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
nlohmann::json preset_json(const std::string& name);

/// Objects built from a configuration, ready to run.
struct Scenario {
  RunConfig config;
  ScreenedKernel kernel;
  std::unique_ptr<FieldProvider> provider;
  SystemState initial;
  EngineOptions options;

  Engine engine() const { return Engine(*provider, kernel, config.propagation, options); }
  SpectrumBins spectrum_bins() const;
};

Scenario build_scenario(const RunConfig& config);

/// Observables written alongside each snapshot.
struct RunReport {
  std::filesystem::path dir;
  nlohmann::json manifest;
  RunSummary summary;
  SystemState final_state;
};

/// Progress callback: (step, time) at every snapshot.
using Progress = std::function<void(std::size_t, double)>;

/// Builds, runs and writes the container. On failure the container is
/// finalized as incomplete (with the error in meta.error) and the exception
/// is rethrown.
RunReport run_scenario(const RunConfig& config, const Progress& progress = {});

/// Human-readable report of a run container: datasets, integrity, norms,
/// g-factors, visibility (recomputed from the stored spectra) and spectrum
/// span. Throws IoError naming a damaged dataset.
std::string describe(const std::filesystem::path& manifest_path);

/// Visibility summary of one spectrum over [e0 + lo, e0 + hi] photon energies:
/// {"band", "visibility", "peak_visibility" (mean over the first `peaks`),
/// "peaks", "peak_energies"}, energies in the units of the input. Failures
/// leave the values null and set "error".
nlohmann::json visibility_summary(const std::vector<double>& energies, const std::vector<double>& sigma, double e0,
                                  double photon, double lo, double hi, int peaks);

}  // namespace tdhf
