#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "ofdmrad/harness.hpp"

using namespace ofdmrad;

namespace {

Scene three_target_scene() {
  Scene s;
  s.tx_steer_angle_deg = 30.0;
  const double r[] = {60, 100, 150}, v[] = {-60, 30, 120}, a[] = {10, 25, 45}, snr[] = {30, 15, 25};
  for (int k = 0; k < 3; ++k) s.targets.push_back(Target::from_physical(gain_from_snr_db(snr[k], 1.0), r[k], v[k], a[k]));
  return s;
}

const Target* nearest(const Scene& s, double angle) {
  const Target* best = nullptr;
  for (const Target& t : s.targets) {
    if (!best || std::abs(t.angle_deg - angle) < std::abs(best->angle_deg - angle)) best = &t;
  }
  return best;
}

ExperimentConfig small_experiment() {
  ExperimentConfig e;
  e.cfg = OfdmConfig::desk();
  e.cfg.num_symbols = 8;
  e.scene.targets = {Target::from_physical(gain_from_snr_db(0, 1), 80.0, 70.0, 30.0)};
  e.trials = 5;
  e.seed = 17;
  e.axis = SweepAxis::kSnr;
  e.sweep_values = {-5.0, 5.0};
  return e;
}

}  // namespace

TEST_CASE("seed streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 50; ++s)
    for (std::uint64_t k = 0; k < 3; ++k) seen.insert(derive_seed(s, k));
  CHECK(seen.size() == 150);
  CHECK(derive_seed(5, 1) == derive_seed(5, 1));
}

TEST_CASE("three-target scene") {
  const OfdmConfig cfg = OfdmConfig::desk();
  const Scene scene = three_target_scene();
  const ScenarioRun run = run_scenario(cfg, scene, {}, 2);
  const DetectionReport& rep = run.report;
  CHECK(rep.model_order == 3);
  REQUIRE(rep.targets.size() == 3);
  CHECK(rep.cfo_curves.size() == 3);
  CHECK(rep.maps.size() == 3);
  CHECK(rep.music.values.size() == rep.beamforming.size());
  const DerivedParams d = derive(cfg);
  for (const TargetEstimate& e : rep.targets) {
    const Target& t = *nearest(scene, e.angle_deg);
    CHECK(std::abs(e.angle_deg - t.angle_deg) <= 1.0);
    CHECK(std::abs(e.range_m - t.range_m()) <= d.range_bin_m);
    CHECK(std::abs(e.velocity_mps - t.velocity_mps()) <= d.velocity_bin_mps);
  }
  CHECK(rep.timing.music_s >= 0.0);
}

TEST_CASE("empty scene yields no detections") {
  const ScenarioRun run = run_scenario(OfdmConfig::desk(), Scene{}, {}, 1);
  CHECK(run.report.targets.empty());
  CHECK(run.report.model_order == 0);
  CHECK(run.report.music.values.size() == AngleGrid{}.points().size());
}

TEST_CASE("forced model order and merge warning") {
  EstimatorOptions o;
  o.model_order = 2;
  OfdmConfig cfg = OfdmConfig::desk();
  const Scene s{{Target::from_physical(gain_from_snr_db(20, 1), 80.0, 10.0, 0.0)}, 30.0};
  const ScenarioRun run = run_scenario(cfg, s, o, 3);
  CHECK(run.report.model_order == 2);
  CHECK(run.report.targets.size() <= 2);
  o.model_order = 8;
  CHECK_THROWS_AS(run_scenario(cfg, s, o, 3), Error);
  try {
    run_scenario(cfg, s, o, 3);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    CHECK(e.message().rfind("step 1", 0) == 0);
    CHECK(e.kind() == ErrorKind::kDegenerateNoiseSubspace);
  }
  // A monotone angle spectrum cannot supply the requested peaks.
  o.model_order = 7;
  o.angle_grid = {0.0, 1.0, 0.5};
  const ScenarioRun few = run_scenario(cfg, s, o, 3);
  CHECK(few.report.fewer_peaks_than_order);
  CHECK_FALSE(few.report.warnings.empty());
}

TEST_CASE("experiment validation") {
  ExperimentConfig e = small_experiment();
  e.trials = 0;
  CHECK_THROWS_AS(validate_experiment(e), Error);
  e = small_experiment();
  e.sweep_values = {1.0, std::nan("")};
  CHECK_THROWS_AS(validate_experiment(e), Error);
  e = small_experiment();
  e.sweep_values.clear();
  CHECK_THROWS_AS(validate_experiment(e), Error);
  e = small_experiment();
  e.threads = 0;
  CHECK_THROWS_AS(validate_experiment(e), Error);
  CHECK_NOTHROW(validate_experiment(small_experiment()));
}

TEST_CASE("sweep application") {
  ExperimentConfig e = small_experiment();
  e.scene.targets[0].gain = std::polar(2.0, 0.5);
  const Scene s = apply_sweep(e, 10.0);
  CHECK(std::abs(s.targets[0].gain) == doctest::Approx(std::sqrt(10.0)));
  CHECK(std::arg(s.targets[0].gain) == doctest::Approx(0.5));
  e.axis = SweepAxis::kVelocity;
  CHECK(apply_sweep(e, 40.0).targets[0].velocity_mps() == doctest::Approx(40.0));
}

TEST_CASE("Monte-Carlo tables are independent of the thread count") {
  ExperimentConfig e = small_experiment();
  const RmseTable one = monte_carlo(e);
  e.threads = 3;
  const RmseTable three = monte_carlo(e);
  REQUIRE(one.rows.size() == 2);
  REQUIRE(three.rows.size() == 2);
  for (size_t r = 0; r < 2; ++r) {
    CHECK(one.rows[r].sweep_value == three.rows[r].sweep_value);
    CHECK(one.rows[r].apes.range_rmse_m == three.rows[r].apes.range_rmse_m);
    CHECK(one.rows[r].apes.velocity_rmse_mps == three.rows[r].apes.velocity_rmse_mps);
    CHECK(one.rows[r].baseline.velocity_rmse_mps == three.rows[r].baseline.velocity_rmse_mps);
    CHECK(one.rows[r].apes.matched + one.rows[r].apes.misses == e.trials);
    CHECK(one.rows[r].baseline.matched == e.trials);
    CHECK(one.rows[r].apes.range_rmse_m >= 0.0);
  }
  CHECK(one.trials == 5);
  CHECK(one.seed == 17);
}

TEST_CASE("Monte-Carlo without a sweep axis has one row") {
  ExperimentConfig e = small_experiment();
  e.axis = SweepAxis::kNone;
  e.trials = 2;
  const RmseTable t = monte_carlo(e);
  CHECK(t.rows.size() == 1);
  e.fresh_symbols = false;
  CHECK(monte_carlo(e).rows.size() == 1);
}

TEST_CASE("range profiles") {
  OfdmConfig cfg = OfdmConfig::desk();
  const Scene s{{Target::from_physical(gain_from_snr_db(25, 1), 60.0, 0.0, 25.0),
                 Target::from_physical(gain_from_snr_db(25, 1), 100.0, 0.0, 30.0),
                 Target::from_physical(gain_from_snr_db(25, 1), 150.0, 0.0, 35.0)},
                30.0};
  ProfileRequest req;
  const std::vector<RangeProfile> base = range_profile(cfg, s, {}, 4, req);
  REQUIRE(base.size() == 1);
  CHECK(base[0].angle_deg == 30.0);
  CHECK_FALSE(base[0].velocity_slice);
  CHECK(*std::max_element(base[0].power_db.begin(), base[0].power_db.end()) == doctest::Approx(0.0));

  req.slice_velocity_mps = 0.0;
  const std::vector<RangeProfile> sliced = range_profile(cfg, s, {}, 4, req);
  CHECK(sliced[0].velocity_slice);
  CHECK(sliced[0].slice_doppler == doctest::Approx(0.0));

  // A slice beyond the alias interval reports the branch nearest the request.
  const double period_mps = velocity_from_doppler(doppler_alias_period(cfg), cfg.speed_of_light_mps);
  req.slice_velocity_mps = 1.3 * period_mps;
  const RangeProfile far = range_profile(cfg, s, {}, 4, req)[0];
  CHECK(std::abs(velocity_from_doppler(far.slice_doppler, cfg.speed_of_light_mps) - 1.3 * period_mps) <=
        derive(cfg).velocity_bin_mps / 4);

  req.method = ProfileMethod::kApes;
  req.slice_velocity_mps.reset();
  const std::vector<RangeProfile> apes = range_profile(cfg, s, {}, 4, req);
  CHECK(apes.size() == 3);
  for (const RangeProfile& p : apes) CHECK(p.label.rfind("apes_", 0) == 0);

  req.method = ProfileMethod::kBaseline;
  const std::vector<RangeProfile> empty = range_profile(cfg, Scene{}, {}, 4, req);
  REQUIRE(empty.size() == 1);
  CHECK(empty[0].range_m.size() == 4u * 256u);
}

TEST_CASE("sidelobe metrics on a synthetic profile") {
  const OfdmConfig cfg = OfdmConfig::desk();
  const double bin = derive(cfg).range_bin_m;
  RangeProfile p;
  for (int k = 0; k < 200; ++k) {
    p.range_m.push_back(k * bin / 4);
    p.power_db.push_back(-40.0);
  }
  p.power_db[80] = 0.0;
  // Slightly past sample 80 so no sample sits on a main-lobe edge: samples 77..84 are inside.
  const double target = (20.0 + 0.025) * bin;
  const double isl = integrated_sidelobe_db(p, {target}, cfg);
  CHECK(isl == doctest::Approx(10 * std::log10(192e-4 / (1 + 7e-4))).epsilon(1e-9));
  CHECK(peak_prominence_db(p, target, {target}, cfg) == doctest::Approx(40.0));
}
