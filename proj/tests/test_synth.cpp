#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "ofdmrad/synth.hpp"
#include "oracles.hpp"

using namespace ofdmrad;

namespace {

OfdmConfig small_config() {
  OfdmConfig cfg = OfdmConfig::desk();
  cfg.num_subcarriers = 32;
  cfg.num_symbols = 4;
  cfg.num_rx = 4;
  cfg.num_tx = 4;
  cfg.bandwidth_hz = 50e6 / 8;  // keeps the desk CP ratio and subcarrier spacing
  cfg.cp_duration_s = cfg.elementary_duration_s() / 4;
  cfg.noise_power = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("array steering") {
  const CVector a0 = array_steering(0.0, 8);
  CHECK((a0 - CVector::Ones(8)).norm() < 1e-15);
  const CVector a30 = array_steering(30.0, 8);
  CHECK(std::abs(a30(1) - complex(0.0, 1.0)) < 1e-15);
  const CVector am = array_steering(-37.0, 8), ap = array_steering(37.0, 8);
  CHECK((am - ap.conjugate()).norm() < 1e-14);
}

TEST_CASE("frequency steering") {
  const OfdmConfig cfg = OfdmConfig::full();
  CHECK((freq_steering(cfg, 0.0) - CVector::Ones(cfg.num_subcarriers)).norm() < 1e-15);
  const CVector alias = freq_steering(cfg, 1.0 / cfg.subcarrier_spacing_hz());
  CHECK((alias - CVector::Ones(cfg.num_subcarriers)).cwiseAbs().maxCoeff() < 1e-9);
  const CVector b = freq_steering(cfg, 1e-6);
  // -2 pi * df * 1 us with df = 24414.0625 Hz
  CHECK(std::arg(b(1)) == doctest::Approx(-oracle::pi * 2 * 0.0244140625).epsilon(1e-12));
}

TEST_CASE("temporal steering") {
  const OfdmConfig cfg = OfdmConfig::full();
  CHECK((temporal_steering(cfg, 0.0) - CVector::Ones(cfg.num_symbols)).norm() < 1e-15);
  const CVector alias = temporal_steering(cfg, doppler_alias_period(cfg));
  CHECK((alias - CVector::Ones(cfg.num_symbols)).cwiseAbs().maxCoeff() < 1e-9);
  const double nu = doppler_from_velocity(70.0, cfg.speed_of_light_mps);
  const double turns = cfg.carrier_freq_hz * cfg.symbol_duration_s() * nu;
  CHECK(turns == doctest::Approx(1.434).epsilon(1e-3));
  const CVector c = temporal_steering(cfg, nu);
  CHECK(std::abs(c(1) - std::polar(1.0, -oracle::pi * 2 * turns)) < 1e-12);
}

TEST_CASE("ICI phase") {
  const OfdmConfig cfg = OfdmConfig::full();
  CHECK((ici_phase(cfg, 0.0) - CVector::Ones(cfg.num_subcarriers)).norm() < 1e-15);
  const double nu = doppler_from_velocity(120.0, cfg.speed_of_light_mps);
  const CVector d = ici_phase(cfg, nu);
  CHECK((d.cwiseAbs() - Eigen::VectorXd::Ones(d.size())).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(cfg.carrier_freq_hz * cfg.elementary_duration_s() * nu == doctest::Approx(1.966).epsilon(1e-3));
  // Unitarity of D
  const CMatrix dd = d.asDiagonal();
  CHECK((dd.adjoint() * dd - CMatrix::Identity(d.size(), d.size())).norm() < 1e-10);
}

TEST_CASE("alias identities: c(nu) repeats, D(nu) does not") {
  const OfdmConfig cfg = OfdmConfig::desk();
  const double nu = doppler_from_velocity(30.0, cfg.speed_of_light_mps);
  const double nu2 = nu + doppler_alias_period(cfg);
  CHECK((temporal_steering(cfg, nu) - temporal_steering(cfg, nu2)).norm() < 1e-9);
  CHECK((ici_phase(cfg, nu) - ici_phase(cfg, nu2)).norm() > 1e-2);
}

TEST_CASE("unitary DFT layer") {
  std::mt19937_64 rng(3);
  const CMatrix x = oracle::random_matrix(37, 3, rng);  // odd length on purpose
  const CMatrix f = dft_columns(x, fft::Direction::kForward, 1.0 / std::sqrt(37.0));
  CHECK(oracle::rel_err(f, oracle::dft_matrix(37) * x) < 1e-12);
  const CMatrix back = dft_columns(f, fft::Direction::kInverse, 1.0 / std::sqrt(37.0));
  CHECK(oracle::rel_err(back, x) < 1e-12);
  const oracle::Mat fm = oracle::dft_matrix(64);
  CHECK((fm.adjoint() * fm - oracle::Mat::Identity(64, 64)).norm() < 1e-10);
}

TEST_CASE("symbol generation") {
  OfdmConfig cfg = OfdmConfig::desk();
  cfg.num_subcarriers = 4;
  cfg.num_symbols = 2;
  cfg.cp_duration_s = cfg.elementary_duration_s() / 4;
  const SymbolMatrix a = gen_symbols(cfg, 11), b = gen_symbols(cfg, 11), c = gen_symbols(cfg, 12);
  CHECK(a.x == b.x);
  CHECK(a.x != c.x);
  CHECK(a.x.size() == 8);
  const double h = 1.0 / std::sqrt(2.0);
  for (Eigen::Index k = 0; k < a.x.size(); ++k) {
    const complex s = a.x(k);
    CHECK(std::abs(std::abs(s.real()) - h) < 1e-15);
    CHECK(std::abs(std::abs(s.imag()) - h) < 1e-15);
  }
  CHECK(a.unit_modulus());
  const SymbolMatrix big = gen_symbols(OfdmConfig::desk(), 5);
  std::set<std::pair<int, int>> seen;
  for (Eigen::Index k = 0; k < big.x.size(); ++k) seen.insert({big.x(k).real() > 0, big.x(k).imag() > 0});
  CHECK(seen.size() == 4);
  CHECK(gen_symbols(OfdmConfig::desk(), 5, Alphabet::kUnitModulus).unit_modulus(1e-12));
  CHECK_FALSE(gen_symbols(OfdmConfig::desk(), 5, Alphabet::kGaussian).unit_modulus(1e-3));
}

TEST_CASE("transmit beamformer") {
  const OfdmConfig cfg = OfdmConfig::desk();
  const CVector f = tx_beamformer(cfg, 30.0);
  CHECK(std::abs((array_steering(30.0, cfg.num_tx).transpose() * f)(0) - complex(cfg.num_tx, 0)) < 1e-12);
  CHECK((tx_beamformer(cfg, 0.0) - CVector::Ones(cfg.num_tx)).norm() < 1e-15);
  for (double th = -89.5; th < 90.0; th += 0.5) {
    const double g = std::abs((array_steering(th, cfg.num_tx).transpose() * f)(0));
    CHECK(g <= cfg.num_tx + 1e-9);
    if (std::abs(th - 30.0) > 1e-9) CHECK(g < cfg.num_tx - 1e-6);
  }
}

TEST_CASE("empty noiseless scene gives a zero cube") {
  OfdmConfig cfg = small_config();
  const DataCube cube = synth_cube(cfg, Scene{}, gen_symbols(cfg, 1), 1);
  CHECK(cube.energy() == 0.0);
  CHECK(cube.num_rx() == cfg.num_rx);
}

TEST_CASE("cube matches the per-sample signal model") {
  OfdmConfig cfg = small_config();
  Scene scene;
  scene.tx_steer_angle_deg = 20.0;
  scene.targets = {Target::from_physical({0.7, -0.4}, 80.0, 70.0, 30.0),
                   Target::from_physical({0.2, 0.9}, 150.0, -120.0, -12.0)};
  const SymbolMatrix x = gen_symbols(cfg, 9);
  const DataCube cube = synth_cube(cfg, scene, x, 1);
  std::vector<oracle::PointTarget> pts;
  for (const Target& t : scene.targets) pts.push_back({t.gain, t.delay_s, t.normalized_doppler, t.angle_deg});
  double err = 0.0, ref = 0.0;
  for (int i = 0; i < cfg.num_rx; ++i)
    for (int l = 0; l < cfg.num_subcarriers; ++l)
      for (int m = 0; m < cfg.num_symbols; ++m) {
        const complex want = oracle::sample(cfg, pts, scene.tx_steer_angle_deg, x.x, i, l, m);
        err = std::max(err, std::abs(cube(i, l, m) - want));
        ref = std::max(ref, std::abs(want));
      }
  CHECK(err <= 1e-12 * ref);
}

TEST_CASE("linearity in targets") {
  OfdmConfig cfg = OfdmConfig::desk();
  cfg.noise_power = 0.0;
  const SymbolMatrix x = gen_symbols(cfg, 2);
  const Target t1 = Target::from_physical(1.0, 60.0, -60.0, 10.0);
  const Target t2 = Target::from_physical({0.0, 2.0}, 100.0, 30.0, 25.0);
  Scene both, one, two;
  both.targets = {t1, t2};
  one.targets = {t1};
  two.targets = {t2};
  const DataCube a = synth_cube(cfg, both, x, 1), b = synth_cube(cfg, one, x, 1), c = synth_cube(cfg, two, x, 1);
  for (int i = 0; i < cfg.num_rx; ++i) CHECK(oracle::rel_err(a.antenna(i), b.antenna(i) + c.antenna(i)) < 1e-13);
}

TEST_CASE("per-symbol energy is preserved") {
  OfdmConfig cfg = OfdmConfig::desk();
  cfg.noise_power = 0.0;
  const SymbolMatrix x = gen_symbols(cfg, 4, Alphabet::kGaussian);
  Scene scene;
  scene.targets = {Target::from_physical({1.5, 0.5}, 120.0, 90.0, -20.0)};
  const DataCube cube = synth_cube(cfg, scene, x, 1);
  const complex g = effective_gain(cfg, scene, scene.targets[0]);
  for (int i = 0; i < cfg.num_rx; ++i)
    for (int m = 0; m < cfg.num_symbols; ++m) {
      const double want = std::norm(g) * x.x.col(m).squaredNorm();  // |[a_R]_i| = 1
      CHECK(cube.antenna(i).col(m).squaredNorm() == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("noise calibration") {
  OfdmConfig cfg = OfdmConfig::desk();
  cfg.noise_power = 2.5;
  const DataCube cube = synth_cube(cfg, Scene{}, gen_symbols(cfg, 1), 77);
  const double count = double(cfg.num_rx) * cfg.num_subcarriers * cfg.num_symbols;
  const double var = cube.energy() / count;
  CHECK(std::abs(var - cfg.noise_power) / cfg.noise_power <= 3.0 / std::sqrt(count));
  CHECK(cube.all_finite());
  // Same seed, same noise; different seed, different noise.
  const DataCube again = synth_cube(cfg, Scene{}, gen_symbols(cfg, 1), 77);
  const DataCube other = synth_cube(cfg, Scene{}, gen_symbols(cfg, 1), 78);
  CHECK(cube.antenna(3) == again.antenna(3));
  CHECK(cube.antenna(3) != other.antenna(3));
}

TEST_CASE("synth rejects invalid input") {
  OfdmConfig cfg = OfdmConfig::desk();
  Scene far;
  far.targets = {Target::from_physical(1.0, 1000.0, 0.0, 0.0)};
  CHECK_THROWS_AS(synth_cube(cfg, far, gen_symbols(cfg, 1), 1), Error);
  OfdmConfig other = cfg;
  other.num_symbols = 8;
  CHECK_THROWS_AS(synth_cube(cfg, Scene{}, gen_symbols(other, 1), 1), Error);
}

TEST_CASE("cube file round trip and layout") {
  OfdmConfig cfg = small_config();
  cfg.noise_power = 1.0;
  Scene scene;
  scene.targets = {Target::from_physical(1.0, 40.0, 10.0, 5.0)};
  const DataCube cube = synth_cube(cfg, scene, gen_symbols(cfg, 3), 4);
  const auto dir = std::filesystem::temp_directory_path() / "ofdmrad_test_synth";
  std::filesystem::create_directories(dir);
  save_cube(dir / "c.bin", cube);
  const DataCube back = load_cube(dir / "c.bin");
  for (int i = 0; i < cube.num_rx(); ++i) CHECK(back.antenna(i) == cube.antenna(i));

  // Header, then sample (i=0, m=0, l=1) at byte 32 + 16.
  std::ifstream is(dir / "c.bin", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), {});
  CHECK(bytes.size() == 32 + 16 * size_t(cfg.num_rx * cfg.num_subcarriers * cfg.num_symbols));
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "OFDMCUBE");
  CHECK(bytes[8] == cfg.num_rx);
  CHECK(bytes[16] == cfg.num_subcarriers);
  CHECK(bytes[24] == cfg.num_symbols);
  double re;
  std::memcpy(&re, bytes.data() + 48, 8);
  CHECK(re == cube(0, 1, 0).real());

  const SymbolMatrix x = gen_symbols(cfg, 3);
  save_symbols(dir / "x.bin", x);
  CHECK(load_symbols(dir / "x.bin").x == x.x);
  CHECK_THROWS_AS(load_symbols(dir / "c.bin"), Error);
  {
    std::ofstream bad(dir / "bad.bin", std::ios::binary);
    bad << "NOTACUBE";
  }
  CHECK_THROWS_AS(load_cube(dir / "bad.bin"), Error);
  CHECK_THROWS_AS(load_cube(dir / "missing.bin"), Error);
}
