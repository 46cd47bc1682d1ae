#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ofdmrad/matrix.hpp"
#include "ofdmrad/model.hpp"

namespace ofdmrad {

enum class Alphabet { kQpsk, kUnitModulus, kGaussian };

struct SymbolMatrix {
  CMatrix x;  // N x M, column m is the frequency-domain OFDM symbol x_m
  Alphabet alphabet = Alphabet::kQpsk;

  bool unit_modulus(double tol = 1e-12) const;
};

/// Space / fast-time / slow-time cube: antenna(i) is Y_i (N x M), column m holds y_{i,m}.
class DataCube {
 public:
  DataCube() = default;
  DataCube(int num_rx, int num_samples, int num_symbols);

  int num_rx() const { return static_cast<int>(antennas_.size()); }
  int num_samples() const { return num_samples_; }
  int num_symbols() const { return num_symbols_; }

  CMatrix& antenna(int i) { return antennas_[static_cast<size_t>(i)]; }
  const CMatrix& antenna(int i) const { return antennas_[static_cast<size_t>(i)]; }

  complex& operator()(int i, int l, int m) { return antennas_[static_cast<size_t>(i)](l, m); }
  complex operator()(int i, int l, int m) const { return antennas_[static_cast<size_t>(i)](l, m); }

  /// N x N_R matrix [y_{0,m} ... y_{N_R-1,m}].
  CMatrix snapshot(int m) const;

  bool all_finite() const;
  double energy() const;

 private:
  int num_samples_ = 0;
  int num_symbols_ = 0;
  std::vector<CMatrix> antennas_;
};

/// ULA response exp(j pi i sin(theta)), i = 0..n-1 (half-wavelength spacing).
CVector array_steering(double angle_deg, int num_elems);
/// b(tau): exp(-j 2 pi n df tau), n = 0..N-1.
CVector freq_steering(const OfdmConfig& cfg, double delay_s);
/// c(nu): exp(-j 2 pi f_c m T_sym nu), m = 0..M-1.
CVector temporal_steering(const OfdmConfig& cfg, double nu);
/// Diagonal of D(nu): exp(j 2 pi f_c (T l / N) nu), l = 0..N-1.
CVector ici_phase(const OfdmConfig& cfg, double nu);

SymbolMatrix gen_symbols(const OfdmConfig& cfg, std::uint64_t seed, Alphabet alphabet = Alphabet::kQpsk);

/// f_T = conj(a_T(steer)).
CVector tx_beamformer(const OfdmConfig& cfg, double steer_angle_deg);

/// alpha * a_T(theta)^T f_T for one target.
complex effective_gain(const OfdmConfig& cfg, const Scene& scene, const Target& target);

/// Noiseless unit-gain fast-time/slow-time response of one target,
/// D(nu) F_N^H (X .* b(tau) c^H(nu)).
CMatrix target_response(const OfdmConfig& cfg, const Target& target, const SymbolMatrix& symbols);

/// Sum of target echoes plus circular Gaussian noise of variance cfg.noise_power.
/// Noise is drawn after the signal in (i, l, m) order from a generator seeded with `seed`.
DataCube synth_cube(const OfdmConfig& cfg, const Scene& scene, const SymbolMatrix& symbols,
                    std::uint64_t seed);

// Binary cube file: 8-byte magic "OFDMCUBE", then N_R, N, M as little-endian
// uint64, then N_R*M*N samples as little-endian float64 (re, im) pairs with
// the fast-time index l varying fastest, then symbol m, then antenna i.
void save_cube(const std::filesystem::path& path, const DataCube& cube);
DataCube load_cube(const std::filesystem::path& path);

/// Symbols share the cube layout with N_R = 1.
void save_symbols(const std::filesystem::path& path, const SymbolMatrix& symbols);
SymbolMatrix load_symbols(const std::filesystem::path& path);

}  // namespace ofdmrad
