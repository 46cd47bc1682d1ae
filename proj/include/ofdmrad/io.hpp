#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ofdmrad/harness.hpp"

namespace ofdmrad {

/// Everything a scenario file can describe. Sections that are absent keep
/// their defaults, so one file serves every CLI subcommand.
struct ScenarioFile {
  OfdmConfig cfg = OfdmConfig::desk();
  Scene scene;
  EstimatorOptions options;
  ExperimentConfig experiment;  // its cfg/scene/options mirror the fields above
  ProfileRequest profile;
};

/// Parses scenario JSON text. Unknown keys are rejected so typos surface as
/// ConfigInvalid rather than silently falling back to defaults.
ScenarioFile parse_scenario(const std::string& json_text);
ScenarioFile load_scenario(const std::filesystem::path& path);

/// Full-scale frame (N = 2048, T_cp = T/4); symbol count, array, noise power
/// and scene are kept.
ScenarioFile to_full_scale(ScenarioFile file);

/// Re-synchronizes `experiment` with cfg/scene/options after edits.
void sync_experiment(ScenarioFile& file);

std::string scenario_json(const ScenarioFile& file);

/// "%.12g": enough digits for every exported quantity and stable across runs.
std::string fmt(double value);

/// Detection report without wall-clock timings.
std::string report_json(const OfdmConfig& cfg, const DetectionReport& report);
std::string baseline_json(const OfdmConfig& cfg, const BaselineResult& result, double beam_angle_deg);
std::string rmse_json(const RmseTable& table);

void write_music_csv(std::ostream& os, const DetectionReport& report);
void write_cfo_csv(std::ostream& os, const CfoEstimate& cfo, const OfdmConfig& cfg);
/// Range rows up to the CP-limited maximum range; velocity columns shifted by
/// `doppler_offset` (a whole number of alias periods for unaliased maps).
void write_range_velocity_csv(std::ostream& os, const DelayDopplerMap& map, const OfdmConfig& cfg,
                              double doppler_offset = 0.0);
void write_profiles_csv(std::ostream& os, const std::vector<RangeProfile>& profiles, const OfdmConfig& cfg);
void write_rmse_csv(std::ostream& os, const RmseTable& table);

/// Writes `content` to `path`, throwing Error(kIo) on failure.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace ofdmrad
