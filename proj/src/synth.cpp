#include "ofdmrad/synth.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace ofdmrad {

bool SymbolMatrix::unit_modulus(double tol) const {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (std::abs(std::abs(x(i, j)) - 1.0) > tol) return false;
    }
  }
  return true;
}

DataCube::DataCube(int num_rx, int num_samples, int num_symbols)
    : num_samples_(num_samples),
      num_symbols_(num_symbols),
      antennas_(static_cast<size_t>(num_rx), CMatrix::Zero(num_samples, num_symbols)) {}

CMatrix DataCube::snapshot(int m) const {
  CMatrix out(num_samples_, num_rx());
  for (int i = 0; i < num_rx(); ++i) out.col(i) = antennas_[static_cast<size_t>(i)].col(m);
  return out;
}

bool DataCube::all_finite() const {
  for (const auto& y : antennas_) {
    if (!y.allFinite()) return false;
  }
  return true;
}

double DataCube::energy() const {
  double e = 0.0;
  for (const auto& y : antennas_) e += y.squaredNorm();
  return e;
}

CVector array_steering(double angle_deg, int num_elems) {
  // (2 pi / lambda) d with d = lambda / 2.
  const double step = kPi * std::sin(to_radians(angle_deg));
  CVector a(num_elems);
  for (int i = 0; i < num_elems; ++i) a(i) = std::polar(1.0, step * i);
  return a;
}

CVector freq_steering(const OfdmConfig& cfg, double delay_s) {
  const int n = cfg.num_subcarriers;
  const double df = cfg.subcarrier_spacing_hz();
  CVector b(n);
  for (int k = 0; k < n; ++k) b(k) = std::polar(1.0, -kTwoPi * k * df * delay_s);
  return b;
}

CVector temporal_steering(const OfdmConfig& cfg, double nu) {
  const int m = cfg.num_symbols;
  const double step = cfg.carrier_freq_hz * cfg.symbol_duration_s() * nu;
  CVector c(m);
  for (int k = 0; k < m; ++k) c(k) = std::polar(1.0, -kTwoPi * k * step);
  return c;
}

CVector ici_phase(const OfdmConfig& cfg, double nu) {
  const int n = cfg.num_subcarriers;
  const double ramp = cfg.carrier_freq_hz * cfg.elementary_duration_s() * nu;
  CVector d(n);
  for (int l = 0; l < n; ++l) d(l) = std::polar(1.0, kTwoPi * ramp * l / n);
  return d;
}

SymbolMatrix gen_symbols(const OfdmConfig& cfg, std::uint64_t seed, Alphabet alphabet) {
  std::mt19937_64 rng(seed);
  SymbolMatrix s;
  s.alphabet = alphabet;
  s.x.resize(cfg.num_subcarriers, cfg.num_symbols);
  const double h = 1.0 / std::sqrt(2.0);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::normal_distribution<double> normal(0.0, h);
  for (int m = 0; m < cfg.num_symbols; ++m) {
    for (int n = 0; n < cfg.num_subcarriers; ++n) {
      switch (alphabet) {
        case Alphabet::kQpsk: {
          const std::uint64_t bits = rng() >> 62;
          s.x(n, m) = complex((bits & 1U) ? -h : h, (bits & 2U) ? -h : h);
          break;
        }
        case Alphabet::kUnitModulus:
          s.x(n, m) = std::polar(1.0, phase(rng));
          break;
        case Alphabet::kGaussian: {
          const double re = normal(rng);
          const double im = normal(rng);
          s.x(n, m) = complex(re, im);
          break;
        }
      }
    }
  }
  return s;
}

CVector tx_beamformer(const OfdmConfig& cfg, double steer_angle_deg) {
  return array_steering(steer_angle_deg, cfg.num_tx).conjugate();
}

complex effective_gain(const OfdmConfig& cfg, const Scene& scene, const Target& target) {
  const CVector f_t = tx_beamformer(cfg, scene.tx_steer_angle_deg);
  const CVector a_t = array_steering(target.angle_deg, cfg.num_tx);
  return target.gain * (a_t.transpose() * f_t)(0);
}

CMatrix target_response(const OfdmConfig& cfg, const Target& target, const SymbolMatrix& symbols) {
  const int n = cfg.num_subcarriers;
  const CVector b = freq_steering(cfg, target.delay_s);
  const CVector c = temporal_steering(cfg, target.normalized_doppler);
  const CVector d = ici_phase(cfg, target.normalized_doppler);
  CMatrix freq = symbols.x.array() * (b * c.adjoint()).array();
  CMatrix time = dft_columns(freq, fft::Direction::kInverse, 1.0 / std::sqrt(static_cast<double>(n)));
  return d.asDiagonal() * time;
}

DataCube synth_cube(const OfdmConfig& cfg, const Scene& scene, const SymbolMatrix& symbols,
                    std::uint64_t seed) {
  const SceneCheck checked = validate_scene(cfg, scene);
  if (symbols.x.rows() != cfg.num_subcarriers || symbols.x.cols() != cfg.num_symbols) {
    throw Error(ErrorKind::kConfigInvalid, "symbol matrix dimensions do not match N x M");
  }
  DataCube cube(cfg.num_rx, cfg.num_subcarriers, cfg.num_symbols);
  for (const Target& t : checked.scene.targets) {
    const CMatrix s = target_response(cfg, t, symbols);
    const complex g = effective_gain(cfg, checked.scene, t);
    const CVector a_r = array_steering(t.angle_deg, cfg.num_rx);
    for (int i = 0; i < cfg.num_rx; ++i) cube.antenna(i) += (g * a_r(i)) * s;
  }
  if (cfg.noise_power > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(cfg.noise_power / 2.0));
    for (int i = 0; i < cfg.num_rx; ++i) {
      for (int l = 0; l < cfg.num_subcarriers; ++l) {
        for (int m = 0; m < cfg.num_symbols; ++m) {
          const double re = normal(rng);
          const double im = normal(rng);
          cube(i, l, m) += complex(re, im);
        }
      }
    }
  }
  return cube;
}

namespace {

constexpr std::array<char, 8> kMagic = {'O', 'F', 'D', 'M', 'C', 'U', 'B', 'E'};

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  std::array<char, 8> bytes;
  for (int k = 0; k < 8; ++k) bytes[static_cast<size_t>(k)] = static_cast<char>((bits >> (8 * k)) & 0xFFU);
  os.write(bytes.data(), 8);
}

template <typename T>
T get_le(std::istream& is) {
  std::array<unsigned char, 8> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), 8);
  if (!is) throw Error(ErrorKind::kIo, "unexpected end of cube file");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[static_cast<size_t>(k)]) << (8 * k);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace

void save_cube(const std::filesystem::path& path, const DataCube& cube) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(cube.num_rx()));
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(cube.num_samples()));
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(cube.num_symbols()));
  for (int i = 0; i < cube.num_rx(); ++i) {
    for (int m = 0; m < cube.num_symbols(); ++m) {
      for (int l = 0; l < cube.num_samples(); ++l) {
        put_le<double>(os, cube(i, l, m).real());
        put_le<double>(os, cube(i, l, m).imag());
      }
    }
  }
  if (!os) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

DataCube load_cube(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw Error(ErrorKind::kIo, path.string() + " is not a cube file");
  const auto nr = get_le<std::uint64_t>(is);
  const auto n = get_le<std::uint64_t>(is);
  const auto m = get_le<std::uint64_t>(is);
  constexpr std::uint64_t kLimit = 1ULL << 31;
  if (nr == 0 || n == 0 || m == 0 || nr > kLimit || n > kLimit || m > kLimit || nr * n * m > (1ULL << 32)) {
    throw Error(ErrorKind::kIo, "implausible cube dimensions in " + path.string());
  }
  DataCube cube(static_cast<int>(nr), static_cast<int>(n), static_cast<int>(m));
  for (int i = 0; i < cube.num_rx(); ++i) {
    for (int s = 0; s < cube.num_symbols(); ++s) {
      for (int l = 0; l < cube.num_samples(); ++l) {
        const double re = get_le<double>(is);
        const double im = get_le<double>(is);
        cube(i, l, s) = complex(re, im);
      }
    }
  }
  return cube;
}

void save_symbols(const std::filesystem::path& path, const SymbolMatrix& symbols) {
  DataCube cube(1, static_cast<int>(symbols.x.rows()), static_cast<int>(symbols.x.cols()));
  cube.antenna(0) = symbols.x;
  save_cube(path, cube);
}

SymbolMatrix load_symbols(const std::filesystem::path& path) {
  DataCube cube = load_cube(path);
  if (cube.num_rx() != 1) throw Error(ErrorKind::kIo, path.string() + " is not a symbol file");
  SymbolMatrix s;
  s.x = cube.antenna(0);
  s.alphabet = s.unit_modulus(1e-12) ? Alphabet::kUnitModulus : Alphabet::kGaussian;
  return s;
}

}  // namespace ofdmrad
