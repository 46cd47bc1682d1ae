#include "ofdmrad/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

namespace ofdmrad {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename F>
auto with_stage(const std::string& stage, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), stage + ": " + e.message());
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

DetectionReport run_estimation(const OfdmConfig& cfg, const DataCube& cube, const SymbolMatrix& symbols,
                               const EstimatorOptions& options) {
  DetectionReport report;
  auto t0 = Clock::now();
  const CfoProblem problem = with_stage("setup", [&] { return CfoProblem(cfg, cube, symbols); });

  // Step 1: angles.
  PeakSet peaks = with_stage("step 1 (MUSIC)", [&] {
    const EigenDecomposition eig = herm_eig(problem.scm());
    report.eigenvalues = eig.values;
    report.model_order = options.model_order ? *options.model_order
                                             : estimate_model_order(eig.values, options.order_gamma);
    const std::vector<double> grid = options.angle_grid.points();
    report.music = music_spectrum(eig, report.model_order, grid);
    report.beamforming = beamforming_spectrum(problem.scm(), grid);
    return pick_peaks(report.music, report.model_order);
  });
  report.fewer_peaks_than_order = peaks.fewer_peaks_than_order;
  if (peaks.fewer_peaks_than_order) {
    std::ostringstream os;
    os << "FewerPeaksThanOrder: found " << peaks.angles_deg.size() << " peaks for model order "
       << report.model_order;
    report.warnings.push_back(os.str());
  }
  report.timing.music_s = seconds_since(t0);
  if (peaks.angles_deg.empty()) return report;

  // Step 2: CFO and unstructured channels per angle.
  t0 = Clock::now();
  std::vector<ChannelEstimate> channels;
  with_stage("step 2 (APES)", [&] {
    const std::vector<CMatrix> coarse = coarse_residuals(problem, options.cfo);
    for (double angle : peaks.angles_deg) {
      CfoEstimate cfo = estimate_cfo(problem, angle, options.cfo, &coarse);
      const CVector w = apes_weights(problem.residual(cfo.nu), angle);
      ChannelEstimate ch = estimate_channels(problem, cfo.nu, angle, w);
      ch.search = std::move(cfo);
      channels.push_back(std::move(ch));
    }
    return 0;
  });
  report.timing.apes_s = seconds_since(t0);

  // Step 3: delay, Doppler and gain.
  t0 = Clock::now();
  with_stage("step 3 (recovery)", [&] {
    for (ChannelEstimate& ch : channels) {
      Recovery rec = recover_target(ch, cfg, options.zero_pad_delay, options.zero_pad_doppler);
      report.targets.push_back(rec.estimate);
      report.cfo_curves.push_back(std::move(ch.search));
      if (options.keep_maps) report.maps.push_back(std::move(rec.map));
    }
    return 0;
  });
  report.timing.recovery_s = seconds_since(t0);
  return report;
}

SymbolMatrix scenario_symbols(const OfdmConfig& cfg, std::uint64_t seed) {
  return gen_symbols(cfg, derive_seed(seed, 0), Alphabet::kQpsk);
}

DataCube scenario_cube(const OfdmConfig& cfg, const Scene& scene, const SymbolMatrix& symbols, std::uint64_t seed) {
  return synth_cube(cfg, scene, symbols, derive_seed(seed, 1));
}

ScenarioRun run_scenario(const OfdmConfig& cfg, const Scene& scene, const EstimatorOptions& options,
                         std::uint64_t seed) {
  const SceneCheck checked = validate_scene(cfg, scene);
  ScenarioRun run;
  run.symbols = scenario_symbols(cfg, seed);
  run.cube = scenario_cube(cfg, checked.scene, run.symbols, seed);
  run.report = run_estimation(cfg, run.cube, run.symbols, options);
  run.report.warnings.insert(run.report.warnings.begin(), checked.warnings.begin(), checked.warnings.end());
  return run;
}

void validate_experiment(const ExperimentConfig& exp) {
  if (exp.trials < 1) throw Error(ErrorKind::kConfigInvalid, "trial count must be >= 1");
  if (exp.threads < 1) throw Error(ErrorKind::kConfigInvalid, "thread count must be >= 1");
  for (double v : exp.sweep_values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kConfigInvalid, "sweep values must be finite");
  }
  if (exp.axis != SweepAxis::kNone && exp.sweep_values.empty()) {
    throw Error(ErrorKind::kConfigInvalid, "sweep axis set without sweep values");
  }
  (void)validate_scene(exp.cfg, exp.scene);
}

Scene apply_sweep(const ExperimentConfig& exp, double value) {
  Scene scene = exp.scene;
  for (Target& t : scene.targets) {
    if (exp.axis == SweepAxis::kSnr) {
      const double phase = std::abs(t.gain) > 0.0 ? std::arg(t.gain) : 0.0;
      t.gain = std::polar(gain_from_snr_db(value, exp.cfg.noise_power), phase);
    } else if (exp.axis == SweepAxis::kVelocity) {
      t.normalized_doppler = doppler_from_velocity(value, exp.cfg.speed_of_light_mps);
    }
  }
  return scene;
}

namespace {

struct PairError {
  bool matched = false;
  double range = 0.0;
  double velocity = 0.0;
  double angle = 0.0;
};

struct TrialOutcome {
  bool failed = false;
  std::vector<PairError> apes;      // one per true target
  std::vector<PairError> baseline;  // one per true target
};

TrialOutcome run_trial(const ExperimentConfig& exp, const Scene& scene, int trial) {
  const OfdmConfig& cfg = exp.cfg;
  const double c = cfg.speed_of_light_mps;
  const std::uint64_t trial_seed = exp.seed + static_cast<std::uint64_t>(trial);
  const SymbolMatrix symbols = scenario_symbols(cfg, exp.fresh_symbols ? trial_seed : exp.seed);
  const DataCube cube = scenario_cube(cfg, scene, symbols, trial_seed);
  const auto k = scene.targets.size();

  TrialOutcome out;
  out.apes.resize(k);
  out.baseline.resize(k);
  EstimatorOptions options = exp.options;
  options.keep_maps = false;
  try {
    const DetectionReport report = run_estimation(cfg, cube, symbols, options);
    std::vector<bool> used(report.targets.size(), false);
    for (size_t t = 0; t < k; ++t) {
      const Target& truth = scene.targets[t];
      size_t best = report.targets.size();
      double best_dist = exp.match_tolerance_deg;
      for (size_t e = 0; e < report.targets.size(); ++e) {
        const double dist = std::abs(report.targets[e].angle_deg - truth.angle_deg);
        if (!used[e] && dist <= best_dist) {
          best = e;
          best_dist = dist;
        }
      }
      if (best == report.targets.size()) continue;
      used[best] = true;
      const TargetEstimate& est = report.targets[best];
      out.apes[t] = {true, est.range_m - truth.range_m(c), est.velocity_mps - truth.velocity_mps(c),
                     est.angle_deg - truth.angle_deg};
    }
  } catch (const Error&) {
    out.failed = true;
  }

  const double period = doppler_alias_period(cfg);
  for (size_t t = 0; t < k; ++t) {
    const Target& truth = scene.targets[t];
    const BaselineResult base =
        fft2d_estimate(rx_beamform(cube, truth.angle_deg), symbols, cfg, exp.options.zero_pad_delay,
                       exp.options.zero_pad_doppler);
    double dnu = base.estimate.normalized_doppler - truth.normalized_doppler;
    dnu -= period * std::round(dnu / period);
    out.baseline[t] = {true, base.estimate.range_m - truth.range_m(c), velocity_from_doppler(dnu, c), 0.0};
  }
  return out;
}

MethodStats summarize(const std::vector<TrialOutcome>& trials, bool apes) {
  MethodStats s;
  double sr = 0.0, sv = 0.0, sa = 0.0;
  for (const TrialOutcome& t : trials) {
    if (apes && t.failed) ++s.failures;
    for (const PairError& e : apes ? t.apes : t.baseline) {
      if (!e.matched) {
        ++s.misses;
        continue;
      }
      ++s.matched;
      sr += e.range * e.range;
      sv += e.velocity * e.velocity;
      sa += e.angle * e.angle;
    }
  }
  if (s.matched > 0) {
    s.range_rmse_m = std::sqrt(sr / s.matched);
    s.velocity_rmse_mps = std::sqrt(sv / s.matched);
    s.angle_rmse_deg = std::sqrt(sa / s.matched);
  }
  return s;
}

}  // namespace

RmseTable monte_carlo(const ExperimentConfig& exp) {
  validate_experiment(exp);
  std::vector<double> points = exp.axis == SweepAxis::kNone ? std::vector<double>{0.0} : exp.sweep_values;
  std::vector<Scene> scenes;
  for (double v : points) {
    Scene s = apply_sweep(exp, v);
    (void)validate_scene(exp.cfg, s);
    scenes.push_back(std::move(s));
  }

  const size_t total = points.size() * static_cast<size_t>(exp.trials);
  std::vector<TrialOutcome> outcomes(total);
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t task = next++; task < total; task = next++) {
      const size_t point = task / static_cast<size_t>(exp.trials);
      const int trial = static_cast<int>(task % static_cast<size_t>(exp.trials));
      outcomes[task] = run_trial(exp, scenes[point], trial);
    }
  };
  const int threads = std::min<int>(exp.threads, static_cast<int>(total));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  RmseTable table;
  table.axis = exp.axis;
  table.trials = exp.trials;
  table.seed = exp.seed;
  for (size_t p = 0; p < points.size(); ++p) {
    const auto first = outcomes.begin() + static_cast<std::ptrdiff_t>(p * static_cast<size_t>(exp.trials));
    const std::vector<TrialOutcome> slice(first, first + exp.trials);
    table.rows.push_back({points[p], summarize(slice, true), summarize(slice, false)});
  }
  return table;
}

RangeProfile profile_from_map(const DelayDopplerMap& map, const ProfileRequest& request, const OfdmConfig& cfg,
                              double angle_deg, const std::string& label) {
  RangeProfile prof;
  prof.label = label;
  prof.angle_deg = angle_deg;
  const Eigen::Index rows = map.magnitude.rows();
  const Eigen::Index cols = map.magnitude.cols();
  std::vector<double> power(static_cast<size_t>(rows));
  if (request.slice_velocity_mps) {
    prof.velocity_slice = true;
    const double period = doppler_alias_period(cfg);
    const double nu = doppler_from_velocity(*request.slice_velocity_mps, cfg.speed_of_light_mps);
    double frac = nu / period;
    frac -= std::floor(frac + 0.5);
    const auto col = static_cast<Eigen::Index>((static_cast<long>(std::lround(frac * cols)) + cols / 2 + cols) % cols);
    // Report the column on the alias branch nearest the request.
    const double column = map.doppler_axis[static_cast<size_t>(col)];
    prof.slice_doppler = column + period * std::round((nu - column) / period);
    for (Eigen::Index p = 0; p < rows; ++p) power[static_cast<size_t>(p)] = std::pow(map.magnitude(p, col), 2);
  } else {
    for (Eigen::Index p = 0; p < rows; ++p) power[static_cast<size_t>(p)] = std::pow(map.magnitude.row(p).maxCoeff(), 2);
  }
  const double peak = std::max(*std::max_element(power.begin(), power.end()), 1e-300);
  prof.range_m.resize(static_cast<size_t>(rows));
  prof.power_db.resize(static_cast<size_t>(rows));
  for (Eigen::Index p = 0; p < rows; ++p) {
    prof.range_m[static_cast<size_t>(p)] = range_from_delay(map.delay_axis_s[static_cast<size_t>(p)], cfg.speed_of_light_mps);
    prof.power_db[static_cast<size_t>(p)] = 10.0 * std::log10(std::max(power[static_cast<size_t>(p)] / peak, 1e-30));
  }
  return prof;
}

std::vector<RangeProfile> range_profile(const OfdmConfig& cfg, const Scene& scene, const EstimatorOptions& options,
                                        std::uint64_t seed, const ProfileRequest& request) {
  const SceneCheck checked = validate_scene(cfg, scene);
  const SymbolMatrix symbols = scenario_symbols(cfg, seed);
  const DataCube cube = scenario_cube(cfg, checked.scene, symbols, seed);
  std::vector<RangeProfile> out;
  if (request.method == ProfileMethod::kBaseline) {
    const double angle = request.beam_angle_deg.value_or(scene.tx_steer_angle_deg);
    const BaselineResult base =
        fft2d_estimate(rx_beamform(cube, angle), symbols, cfg, options.zero_pad_delay, options.zero_pad_doppler);
    out.push_back(profile_from_map(base.map, request, cfg, angle, "baseline"));
    return out;
  }
  EstimatorOptions opts = options;
  opts.keep_maps = true;
  const DetectionReport report = run_estimation(cfg, cube, symbols, opts);
  for (size_t k = 0; k < report.maps.size(); ++k) {
    out.push_back(profile_from_map(report.maps[k], request, cfg, report.targets[k].angle_deg,
                                   "apes_" + std::to_string(k)));
  }
  return out;
}

namespace {

std::vector<bool> mainlobe_mask(const RangeProfile& profile, const std::vector<double>& ranges, double width_m) {
  std::vector<bool> mask(profile.range_m.size(), false);
  for (size_t p = 0; p < mask.size(); ++p) {
    for (double r : ranges) {
      if (std::abs(profile.range_m[p] - r) <= width_m) mask[p] = true;
    }
  }
  return mask;
}

}  // namespace

double integrated_sidelobe_db(const RangeProfile& profile, const std::vector<double>& target_ranges_m,
                              const OfdmConfig& cfg, double mainlobe_bins) {
  const double width = mainlobe_bins * derive(cfg).range_bin_m;
  const std::vector<bool> main = mainlobe_mask(profile, target_ranges_m, width);
  double in = 0.0, out = 0.0;
  for (size_t p = 0; p < main.size(); ++p) {
    const double lin = std::pow(10.0, profile.power_db[p] / 10.0);
    (main[p] ? in : out) += lin;
  }
  return 10.0 * std::log10(std::max(out, 1e-300) / std::max(in, 1e-300));
}

double peak_prominence_db(const RangeProfile& profile, double target_range_m,
                          const std::vector<double>& all_ranges_m, const OfdmConfig& cfg, double mainlobe_bins) {
  const double width = mainlobe_bins * derive(cfg).range_bin_m;
  const std::vector<bool> main = mainlobe_mask(profile, all_ranges_m, width);
  const std::vector<bool> own = mainlobe_mask(profile, {target_range_m}, width);
  double peak = -1e300;
  std::vector<double> side;
  for (size_t p = 0; p < main.size(); ++p) {
    if (own[p]) peak = std::max(peak, profile.power_db[p]);
    if (!main[p]) side.push_back(profile.power_db[p]);
  }
  if (side.empty()) return peak;
  const auto mid = side.begin() + static_cast<std::ptrdiff_t>(side.size() / 2);
  std::nth_element(side.begin(), mid, side.end());
  return peak - *mid;
}

}  // namespace ofdmrad
