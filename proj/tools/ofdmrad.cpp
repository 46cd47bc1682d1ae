// Command-line front end: synthesize cubes, run the estimator and the FFT
// baseline, Monte-Carlo sweeps and range profiles.
//
// Exit codes: 0 success, 2 configuration or I/O error, 3 estimation failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "ofdmrad/io.hpp"

namespace fs = std::filesystem;
using namespace ofdmrad;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitEstimation = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool full = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Overrides the scenario seed");
  cmd->add_option("--out-dir", c.out_dir, "Output directory (created if missing)");
  cmd->add_flag("--full", c.full, "Full-scale frame (N = 2048, T_cp = T/4)");
}

ScenarioFile load(const Common& c) {
  ScenarioFile f = load_scenario(c.config);
  if (c.full) f = to_full_scale(std::move(f));
  if (c.seed) {
    f.cfg.rng_seed = *c.seed;
    f.experiment.seed = *c.seed;
  }
  sync_experiment(f);
  return f;
}

fs::path out_path(const Common& c, const std::string& name) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + c.out_dir + ": " + ec.message());
  return fs::path(c.out_dir) / name;
}

template <typename Writer>
void write_csv(const Common& c, const std::string& name, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  write_file(out_path(c, name), os.str());
}

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void write_report(const Common& c, const OfdmConfig& cfg, const DetectionReport& report) {
  write_file(out_path(c, "report.json"), report_json(cfg, report));
  write_csv(c, "music.csv", [&](std::ostream& os) { write_music_csv(os, report); });
  for (size_t k = 0; k < report.targets.size(); ++k) {
    const std::string idx = std::to_string(k);
    write_csv(c, "cfo_" + idx + ".csv", [&](std::ostream& os) { write_cfo_csv(os, report.cfo_curves[k], cfg); });
    if (k < report.maps.size()) {
      const TargetEstimate& t = report.targets[k];
      write_csv(c, "range_velocity_" + idx + ".csv", [&](std::ostream& os) {
        write_range_velocity_csv(os, report.maps[k], cfg, t.normalized_doppler - t.doppler_aliased);
      });
    }
  }
  for (const TargetEstimate& t : report.targets) {
    std::cout << "angle " << fmt(t.angle_deg) << " deg  range " << fmt(t.range_m) << " m  velocity "
              << fmt(t.velocity_mps) << " m/s  |gain| " << fmt(std::abs(t.gain)) << '\n';
  }
}

int run_synth(const Common& c) {
  const ScenarioFile f = load(c);
  const SceneCheck checked = validate_scene(f.cfg, f.scene);
  warn(checked.warnings);
  const SymbolMatrix symbols = scenario_symbols(f.cfg, f.cfg.rng_seed);
  const DataCube cube = scenario_cube(f.cfg, checked.scene, symbols, f.cfg.rng_seed);
  save_cube(out_path(c, "cube.bin"), cube);
  save_symbols(out_path(c, "symbols.bin"), symbols);
  write_file(out_path(c, "scenario.json"), scenario_json(f));
  return 0;
}

int run_estimate(const Common& c, const std::string& cube_file, const std::string& symbols_file) {
  const ScenarioFile f = load(c);
  DetectionReport report;
  if (cube_file.empty()) {
    ScenarioRun run = run_scenario(f.cfg, f.scene, f.options, f.cfg.rng_seed);
    report = std::move(run.report);
  } else {
    const DataCube cube = load_cube(cube_file);
    const SymbolMatrix symbols = load_symbols(symbols_file);
    if (cube.num_rx() != f.cfg.num_rx || cube.num_samples() != f.cfg.num_subcarriers ||
        cube.num_symbols() != f.cfg.num_symbols) {
      throw Error(ErrorKind::kConfigInvalid, "cube dimensions do not match the configuration");
    }
    report = run_estimation(f.cfg, cube, symbols, f.options);
  }
  warn(report.warnings);
  write_report(c, f.cfg, report);
  return 0;
}

int run_baseline(const Common& c, std::optional<double> angle) {
  const ScenarioFile f = load(c);
  const SceneCheck checked = validate_scene(f.cfg, f.scene);
  warn(checked.warnings);
  const SymbolMatrix symbols = scenario_symbols(f.cfg, f.cfg.rng_seed);
  const DataCube cube = scenario_cube(f.cfg, checked.scene, symbols, f.cfg.rng_seed);
  std::vector<double> angles;
  if (angle) {
    angles.push_back(*angle);
  } else {
    for (const Target& t : f.scene.targets) angles.push_back(t.angle_deg);
  }
  if (angles.empty()) angles.push_back(f.scene.tx_steer_angle_deg);
  for (size_t k = 0; k < angles.size(); ++k) {
    const BaselineResult r = fft2d_estimate(rx_beamform(cube, angles[k]), symbols, f.cfg, f.options.zero_pad_delay,
                                            f.options.zero_pad_doppler);
    const std::string idx = std::to_string(k);
    write_file(out_path(c, "baseline_" + idx + ".json"), baseline_json(f.cfg, r, angles[k]));
    write_csv(c, "baseline_range_velocity_" + idx + ".csv",
              [&](std::ostream& os) { write_range_velocity_csv(os, r.map, f.cfg); });
    std::cout << "beam " << fmt(angles[k]) << " deg  range " << fmt(r.estimate.range_m) << " m  velocity "
              << fmt(r.estimate.velocity_mps) << " m/s (aliased)\n";
  }
  return 0;
}

int run_montecarlo(const Common& c, const std::string& sweep, const std::vector<double>& values,
                   std::optional<int> trials, int threads) {
  ScenarioFile f = load(c);
  ExperimentConfig exp = f.experiment;
  if (trials) exp.trials = *trials;
  exp.threads = threads;
  const SweepAxis file_axis = exp.axis;
  if (sweep == "snr") {
    exp.axis = SweepAxis::kSnr;
  } else if (sweep == "velocity") {
    exp.axis = SweepAxis::kVelocity;
  } else if (sweep == "none") {
    exp.axis = SweepAxis::kNone;
  }
  // Values from the file belong to the file's axis.
  if (exp.axis != file_axis) exp.sweep_values.clear();
  if (!values.empty()) exp.sweep_values = values;
  if (exp.axis == SweepAxis::kNone) exp.sweep_values.clear();
  if (exp.axis != SweepAxis::kNone && exp.sweep_values.empty()) {
    exp.sweep_values = exp.axis == SweepAxis::kSnr ? std::vector<double>{-10, -5, 0, 5, 10}
                                                   : std::vector<double>{10, 40, 70, 100, 130};
  }
  const RmseTable table = monte_carlo(exp);
  write_csv(c, "rmse.csv", [&](std::ostream& os) { write_rmse_csv(os, table); });
  write_file(out_path(c, "rmse.json"), rmse_json(table));
  write_rmse_csv(std::cout, table);
  return 0;
}

int run_profile(const Common& c, const std::string& method, std::optional<double> beam,
                std::optional<double> slice) {
  const ScenarioFile f = load(c);
  ProfileRequest req = f.profile;
  if (method == "baseline") req.method = ProfileMethod::kBaseline;
  if (method == "apes") req.method = ProfileMethod::kApes;
  if (beam) req.beam_angle_deg = beam;
  if (slice) req.slice_velocity_mps = slice;
  const ScenarioRun run = run_scenario(f.cfg, f.scene, f.options, f.cfg.rng_seed);
  warn(run.report.warnings);
  write_csv(c, "angle_spectrum.csv", [&](std::ostream& os) { write_music_csv(os, run.report); });
  const std::vector<RangeProfile> profiles = range_profile(f.cfg, f.scene, f.options, f.cfg.rng_seed, req);
  write_csv(c, "range_profile.csv", [&](std::ostream& os) { write_profiles_csv(os, profiles, f.cfg); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIMO-OFDM radar simulation and ICI-aware parameter estimation"};
  app.require_subcommand(1);

  Common synth_c, est_c, base_c, mc_c, prof_c;
  auto* synth = app.add_subcommand("synth", "Write a synthesized data cube and its symbols");
  add_common(synth, synth_c);

  auto* estimate = app.add_subcommand("estimate", "Run MUSIC + APES + 2-D FFT estimation");
  add_common(estimate, est_c);
  std::string cube_file, symbols_file;
  auto* cube_opt = estimate->add_option("--cube", cube_file, "Cube file from 'synth'")->check(CLI::ExistingFile);
  auto* sym_opt = estimate->add_option("--symbols", symbols_file, "Symbol file from 'synth'")->check(CLI::ExistingFile);
  cube_opt->needs(sym_opt);
  sym_opt->needs(cube_opt);

  auto* baseline = app.add_subcommand("baseline", "Classical 2-D FFT periodogram after receive beamforming");
  add_common(baseline, base_c);
  std::optional<double> base_angle;
  baseline->add_option("--angle", base_angle, "Beam angle in degrees (default: each true target angle)");

  auto* mc = app.add_subcommand("montecarlo", "RMSE sweep against the baseline");
  add_common(mc, mc_c);
  std::string sweep;
  std::vector<double> sweep_values;
  std::optional<int> trials;
  int threads = 1;
  mc->add_option("--sweep", sweep, "Sweep axis")->check(CLI::IsMember({"snr", "velocity", "none"}));
  mc->add_option("--values", sweep_values, "Sweep values (dB or m/s), comma or space separated")->delimiter(',');
  mc->add_option("--trials", trials, "Trials per sweep point")->check(CLI::PositiveNumber);
  mc->add_option("--threads", threads, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);

  auto* profile = app.add_subcommand("profile", "Angle spectra and 1-D range profiles");
  add_common(profile, prof_c);
  std::string method;
  std::optional<double> beam, slice;
  profile->add_option("--method", method, "baseline or apes")->check(CLI::IsMember({"baseline", "apes"}));
  profile->add_option("--angle", beam, "Baseline beam angle in degrees");
  profile->add_option("--velocity", slice, "Slice at this velocity instead of the max over Doppler");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) return run_synth(synth_c);
    if (*estimate) return run_estimate(est_c, cube_file, symbols_file);
    if (*baseline) return run_baseline(base_c, base_angle);
    if (*mc) return run_montecarlo(mc_c, sweep, sweep_values, trials, threads);
    if (*profile) return run_profile(prof_c, method, beam, slice);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::kNotHermitian:
      case ErrorKind::kDegenerateNoiseSubspace:
      case ErrorKind::kSingularResidual:
        return kExitEstimation;
      default:
        return kExitConfig;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEstimation;
  }
  return 0;
}
