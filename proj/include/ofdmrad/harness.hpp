#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ofdmrad/apes.hpp"
#include "ofdmrad/baseline.hpp"
#include "ofdmrad/music.hpp"
#include "ofdmrad/recovery.hpp"

namespace ofdmrad {

struct EstimatorOptions {
  AngleGrid angle_grid;
  double order_gamma = 10.0;
  std::optional<int> model_order;  // forces K instead of the eigenvalue threshold
  CfoSearch cfo;
  int zero_pad_delay = 4;
  int zero_pad_doppler = 4;
  bool keep_maps = true;
};

struct StageTiming {
  double music_s = 0.0;
  double apes_s = 0.0;
  double recovery_s = 0.0;
};

struct DetectionReport {
  std::vector<TargetEstimate> targets;
  std::vector<CfoEstimate> cfo_curves;   // one per detected angle
  std::vector<DelayDopplerMap> maps;     // one per detected angle when keep_maps
  AngleSpectrum music;
  std::vector<double> beamforming;       // ordinary beamforming on the same grid
  RVector eigenvalues;
  int model_order = 0;
  bool fewer_peaks_than_order = false;
  std::vector<std::string> warnings;
  StageTiming timing;  // wall-clock; not part of any deterministic output
};

/// Independent 64-bit streams from one seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Steps 1-3 on a given cube. Stage failures are rethrown with the stage named.
DetectionReport run_estimation(const OfdmConfig& cfg, const DataCube& cube, const SymbolMatrix& symbols,
                               const EstimatorOptions& options);

struct ScenarioRun {
  SymbolMatrix symbols;
  DataCube cube;
  DetectionReport report;
};

/// Symbols from derive_seed(seed, 0), noise from derive_seed(seed, 1).
SymbolMatrix scenario_symbols(const OfdmConfig& cfg, std::uint64_t seed);
DataCube scenario_cube(const OfdmConfig& cfg, const Scene& scene, const SymbolMatrix& symbols, std::uint64_t seed);
ScenarioRun run_scenario(const OfdmConfig& cfg, const Scene& scene, const EstimatorOptions& options,
                         std::uint64_t seed);

enum class SweepAxis { kNone, kSnr, kVelocity };

struct ExperimentConfig {
  OfdmConfig cfg;
  Scene scene;
  EstimatorOptions options;
  int trials = 100;
  std::uint64_t seed = 1;
  SweepAxis axis = SweepAxis::kNone;
  std::vector<double> sweep_values;
  bool fresh_symbols = true;
  int threads = 1;
  double match_tolerance_deg = 5.0;
};

void validate_experiment(const ExperimentConfig& exp);

/// Scene with every target's SNR (dB, gain phase kept) or velocity replaced.
Scene apply_sweep(const ExperimentConfig& exp, double value);

struct MethodStats {
  double range_rmse_m = 0.0;
  double velocity_rmse_mps = 0.0;
  double angle_rmse_deg = 0.0;
  int matched = 0;
  int misses = 0;
  int failures = 0;  // trials where the estimator raised
};

struct RmseRow {
  double sweep_value = 0.0;
  MethodStats apes;
  MethodStats baseline;
};

struct RmseTable {
  SweepAxis axis = SweepAxis::kNone;
  std::vector<RmseRow> rows;
  int trials = 0;
  std::uint64_t seed = 0;
};

/// Trial t uses seed + t for noise (and, with fresh symbols, for X).
/// RMSE pairs each true target with the nearest unused estimated angle within
/// `match_tolerance_deg`. The baseline beamforms toward the true angle and its
/// velocity error is folded into the principal slow-time alias interval.
RmseTable monte_carlo(const ExperimentConfig& exp);

enum class ProfileMethod { kBaseline, kApes };

struct RangeProfile {
  std::string label;
  double angle_deg = 0.0;
  bool velocity_slice = false;  // false: max over Doppler per range bin
  double slice_doppler = 0.0;
  std::vector<double> range_m;
  std::vector<double> power_db;  // normalized to the profile peak
};

struct ProfileRequest {
  ProfileMethod method = ProfileMethod::kBaseline;
  std::optional<double> beam_angle_deg;       // baseline; defaults to TX steering angle
  std::optional<double> slice_velocity_mps;   // otherwise velocity-collapsed
};

/// Range cut through a baseline or per-angle APES delay-Doppler map.
RangeProfile profile_from_map(const DelayDopplerMap& map, const ProfileRequest& request, const OfdmConfig& cfg,
                              double angle_deg, const std::string& label);

/// Baseline: one profile. APES: one profile per detected angle.
std::vector<RangeProfile> range_profile(const OfdmConfig& cfg, const Scene& scene, const EstimatorOptions& options,
                                        std::uint64_t seed, const ProfileRequest& request);

/// Sidelobe power outside +/- `mainlobe_bins` range bins of every listed
/// range, over the power inside, in dB.
double integrated_sidelobe_db(const RangeProfile& profile, const std::vector<double>& target_ranges_m,
                              const OfdmConfig& cfg, double mainlobe_bins = 1.0);

/// Peak within the target's main lobe over the median sidelobe power, in dB.
double peak_prominence_db(const RangeProfile& profile, double target_range_m,
                          const std::vector<double>& all_ranges_m, const OfdmConfig& cfg,
                          double mainlobe_bins = 1.0);

}  // namespace ofdmrad
