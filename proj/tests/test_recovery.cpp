#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ofdmrad/harness.hpp"
#include "ofdmrad/recovery.hpp"
#include "oracles.hpp"

using namespace ofdmrad;

namespace {

const OfdmConfig kDesk = [] {
  OfdmConfig cfg = OfdmConfig::desk();
  cfg.noise_power = 0.0;
  return cfg;
}();

// Grid points of the zero-padded map.
double delay_cell(const OfdmConfig& cfg, int zr) { return 1.0 / (zr * cfg.bandwidth_hz); }
double doppler_cell(const OfdmConfig& cfg, int zd) { return doppler_alias_period(cfg) / (zd * cfg.num_symbols); }

CMatrix structured(const OfdmConfig& cfg, complex gain, double tau, double nu) {
  return gain * freq_steering(cfg, tau) * temporal_steering(cfg, nu).adjoint();
}

}  // namespace

TEST_CASE("frequency channel of a delta") {
  CMatrix h = CMatrix::Zero(kDesk.taps(), kDesk.num_symbols);
  h.row(0).setOnes();
  const CMatrix g = freq_channel(h, kDesk.num_subcarriers);
  const CMatrix want = CMatrix::Constant(kDesk.num_subcarriers, kDesk.num_symbols, 1.0 / std::sqrt(256.0));
  CHECK(oracle::rel_err(g, want) < 1e-14);
}

TEST_CASE("frequency channel: structured taps and linearity") {
  const int p = 13;
  const double tau = p / kDesk.bandwidth_hz;
  const double nu = doppler_from_velocity(44.0, kDesk.speed_of_light_mps);
  const complex alpha(0.3, -2.0);
  CMatrix h = CMatrix::Zero(kDesk.taps(), kDesk.num_symbols);
  h.row(p) = alpha * std::sqrt(256.0) * temporal_steering(kDesk, nu).adjoint();
  CHECK(oracle::rel_err(freq_channel(h, 256), structured(kDesk, alpha, tau, nu)) < 1e-12);
  std::mt19937_64 rng(1);
  const CMatrix a = oracle::random_matrix(kDesk.taps(), 16, rng), b = oracle::random_matrix(kDesk.taps(), 16, rng);
  CHECK(oracle::rel_err(freq_channel(a + b, 256), freq_channel(a, 256) + freq_channel(b, 256)) < 1e-13);
  // Dense oracle: first L columns of the unitary DFT.
  CHECK(oracle::rel_err(freq_channel(a, 256), oracle::dft_matrix(256).leftCols(kDesk.taps()) * a) < 1e-12);
  CHECK_THROWS_AS(freq_channel(CMatrix::Zero(300, 2), 256), Error);
}

TEST_CASE("on-grid delay-Doppler peak") {
  const double tau = 37 * delay_cell(kDesk, 4);
  const double nu = 5 * doppler_cell(kDesk, 4);
  const DelayDopplerMap map = delay_doppler_map(structured(kDesk, 1.0, tau, nu), kDesk);
  CHECK(map.magnitude.rows() == 4 * 256);
  CHECK(map.magnitude.cols() == 4 * 16);
  CHECK(map.delay_axis_s.size() == 1024);
  CHECK(map.doppler_axis.size() == 64);
  const DelayDopplerPeak pk = peak_delay_doppler(map, kDesk);
  CHECK(pk.delay_index == 37);
  CHECK(pk.doppler_index == 32 + 5);
  CHECK(pk.delay_offset == doctest::Approx(0.0));
  CHECK(pk.doppler_offset == doctest::Approx(0.0));
  CHECK(pk.value == doctest::Approx(std::sqrt(256.0 * 16.0)).epsilon(1e-12));
  CHECK(pk.delay_s == doctest::Approx(tau).epsilon(1e-12));
  CHECK(pk.doppler_aliased == doctest::Approx(nu).epsilon(1e-12));
  CHECK(map.magnitude.minCoeff() >= 0.0);
}

TEST_CASE("Doppler axis is the principal alias interval") {
  const double period = doppler_alias_period(kDesk);
  const DelayDopplerMap map = delay_doppler_map(CMatrix::Ones(256, 16), kDesk);
  CHECK(map.doppler_axis.front() == doctest::Approx(-0.5 * period));
  for (size_t k = 1; k < map.doppler_axis.size(); ++k) CHECK(map.doppler_axis[k] > map.doppler_axis[k - 1]);
  CHECK(map.doppler_axis.back() < 0.5 * period);
  const double nu = 0.4 * period + period;  // lands at +0.4 period after aliasing
  const DelayDopplerPeak pk = peak_delay_doppler(delay_doppler_map(structured(kDesk, 1.0, 0.0, nu), kDesk), kDesk);
  CHECK(pk.doppler_aliased == doctest::Approx(0.4 * period).epsilon(1e-3));
}

TEST_CASE("all-ones channel peaks at zero delay and Doppler") {
  const DelayDopplerPeak pk = peak_delay_doppler(delay_doppler_map(CMatrix::Ones(256, 16), kDesk), kDesk);
  CHECK(pk.delay_s == doctest::Approx(0.0).scale(1e-9));
  CHECK(pk.doppler_aliased == doctest::Approx(0.0));
}

TEST_CASE("delay shift theorem") {
  std::mt19937_64 rng(3);
  const CMatrix g = structured(kDesk, 1.0, 10 * delay_cell(kDesk, 4), 0.0);
  const double shift = 20 * delay_cell(kDesk, 4);
  const CMatrix shifted = freq_steering(kDesk, shift).asDiagonal() * g;
  const DelayDopplerPeak a = peak_delay_doppler(delay_doppler_map(g, kDesk), kDesk);
  const DelayDopplerPeak b = peak_delay_doppler(delay_doppler_map(shifted, kDesk), kDesk);
  CHECK(b.delay_index - a.delay_index == 20);
}

TEST_CASE("Parseval and phase invariance") {
  std::mt19937_64 rng(5);
  const CMatrix g = oracle::random_matrix(256, 16, rng);
  for (int zr : {1, 2, 4}) {
    for (int zd : {1, 3, 4}) {
      const DelayDopplerMap map = delay_doppler_map(g, kDesk, zr, zd);
      CHECK(map.magnitude.squaredNorm() == doctest::Approx(zr * zd * g.squaredNorm()).epsilon(1e-8));
    }
  }
  const DelayDopplerMap a = delay_doppler_map(g, kDesk);
  const DelayDopplerMap b = delay_doppler_map(CMatrix(std::polar(1.0, 0.7) * g), kDesk);
  CHECK((a.magnitude - b.magnitude).cwiseAbs().maxCoeff() <= 1e-12 * a.magnitude.maxCoeff());
  CHECK_THROWS_AS(delay_doppler_map(g, kDesk, 0, 4), Error);
}

TEST_CASE("off-grid delay interpolation") {
  const double cell = delay_cell(kDesk, 4);
  const double native_bin = 1.0 / kDesk.bandwidth_hz;
  double worst = 0.0;
  for (double frac = 0.0; frac < 1.0; frac += 0.05) {
    const double tau = (50 + frac) * cell;
    const DelayDopplerPeak pk = peak_delay_doppler(delay_doppler_map(structured(kDesk, 1.0, tau, 0.0), kDesk), kDesk);
    worst = std::max(worst, std::abs(pk.delay_s - tau) / native_bin);
  }
  CHECK(worst <= 0.1);
}

TEST_CASE("ties go to the lowest delay, then Doppler index") {
  DelayDopplerMap map = delay_doppler_map(CMatrix::Zero(256, 16), kDesk);
  map.magnitude(40, 10) = 1.0;
  map.magnitude(20, 50) = 1.0;
  map.magnitude(20, 30) = 1.0;
  const DelayDopplerPeak pk = peak_delay_doppler(map, kDesk);
  CHECK(pk.delay_index == 20);
  CHECK(pk.doppler_index == 30);
}

TEST_CASE("Doppler unaliasing") {
  const OfdmConfig full = OfdmConfig::full();
  const double c = full.speed_of_light_mps;
  const double period = doppler_alias_period(full);
  CHECK(velocity_from_doppler(period, c) == doctest::Approx(48.79).epsilon(1e-3));
  const double nu = doppler_from_velocity(70.0, c);
  const double aliased = nu - period;  // 70 - 48.8 = 21.2 m/s
  CHECK(velocity_from_doppler(unalias_doppler(aliased, doppler_from_velocity(69.0, c), full), c) ==
        doctest::Approx(70.0).epsilon(1e-12));
  const double slow = doppler_from_velocity(10.0, c);
  CHECK(unalias_doppler(slow, doppler_from_velocity(11.0, c), full) == slow);
  const double fast = doppler_from_velocity(120.0, c);
  const double fast_aliased = fast - 2 * period;
  CHECK(unalias_doppler(fast_aliased, doppler_from_velocity(119.0, c), full) == doctest::Approx(fast).epsilon(1e-12));
}

TEST_CASE("gain estimate") {
  const double tau = 1.234e-7, nu = 3.3e-7;
  const complex alpha(1.5, -0.25);
  CHECK(std::abs(gain_estimate(structured(kDesk, alpha, tau, nu), tau, nu, kDesk, 256) - alpha) < 1e-12);
  CHECK(std::abs(gain_estimate(CMatrix::Zero(256, 16), tau, nu, kDesk, 256)) == 0.0);
  // With L taps the estimate inverts the L-tap projection of b.
  const double tap_tau = 9 / kDesk.bandwidth_hz;
  CHECK(std::abs(gain_estimate(structured(kDesk, alpha, tap_tau, nu), tap_tau, nu, kDesk, 64) - alpha) < 1e-12);
}

TEST_CASE("noiseless single target end to end") {
  const Scene scene{{Target::from_physical({0.6, 0.8}, 80.0, 70.0, 30.0)}, 30.0};
  const ScenarioRun run = run_scenario(kDesk, scene, {}, 3);
  REQUIRE(run.report.targets.size() == 1);
  const TargetEstimate& e = run.report.targets[0];
  const DerivedParams d = derive(kDesk);
  CHECK(std::abs(e.angle_deg - 30.0) <= 0.5);
  CHECK(std::abs(e.range_m - 80.0) <= 0.1 * d.range_bin_m);
  CHECK(std::abs(e.velocity_mps - 70.0) <= 0.1 * d.velocity_bin_mps);
  const complex want = effective_gain(kDesk, scene, scene.targets[0]);
  CHECK(std::abs(std::abs(e.gain) - std::abs(want)) <= 1e-3 * std::abs(want));
  CHECK(e.range_m == doctest::Approx(range_from_delay(e.delay_s, kDesk.speed_of_light_mps)));
  CHECK(e.velocity_mps == doctest::Approx(velocity_from_doppler(e.normalized_doppler, kDesk.speed_of_light_mps)));
}
