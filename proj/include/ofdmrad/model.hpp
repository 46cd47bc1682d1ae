#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ofdmrad {

using complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kDefaultSpeedOfLight = 299792458.0;

/// Degrees at the API boundary, radians everywhere below it.
inline double to_radians(double degrees) { return degrees * kPi / 180.0; }

enum class ErrorKind {
  kConfigInvalid,
  kDelayExceedsCp,
  kTooManyTargets,
  kNotHermitian,
  kDegenerateNoiseSubspace,
  kSingularResidual,
  kIo,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` carries the error category.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// what() without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

/// OFDM frame and array configuration. The subcarrier spacing is B/N and is
/// never stored separately.
struct OfdmConfig {
  double carrier_freq_hz = 60e9;
  double bandwidth_hz = 50e6;
  int num_subcarriers = 2048;
  int num_symbols = 64;
  double cp_duration_s = 10.24e-6;
  int num_tx = 8;
  int num_rx = 8;
  /// Unstructured channel length; 0 selects min(max_taps, 128).
  int channel_taps = 0;
  double noise_power = 1.0;
  double speed_of_light_mps = kDefaultSpeedOfLight;
  std::uint64_t rng_seed = 1;

  double subcarrier_spacing_hz() const { return bandwidth_hz / num_subcarriers; }
  double elementary_duration_s() const { return 1.0 / subcarrier_spacing_hz(); }
  double symbol_duration_s() const { return cp_duration_s + elementary_duration_s(); }
  double wavelength_m() const { return speed_of_light_mps / carrier_freq_hz; }
  int max_taps() const;
  int taps() const;

  /// f_c = 60 GHz, B = 50 MHz, N = 2048, M = 64, T_cp = T/4, 8 x 8 array.
  static OfdmConfig full();
  /// N = 256, M = 16 with the same bandwidth and CP ratio; used by CI runs.
  static OfdmConfig desk();
};

struct DerivedParams {
  double subcarrier_spacing_hz;
  double elementary_duration_s;
  double symbol_duration_s;
  double lambda_m;
  double elem_spacing_m;
  double range_bin_m;
  double velocity_bin_mps;
  double max_unambiguous_velocity_mps;
  double max_range_m;
  int max_taps;
};

/// Throws Error(kConfigInvalid) when any invariant of `cfg` is violated.
void validate_config(const OfdmConfig& cfg);
DerivedParams derive(const OfdmConfig& cfg);

// Physical <-> normalized conversions. Velocity is only ever a view of nu.
inline double delay_from_range(double range_m, double c) { return 2.0 * range_m / c; }
inline double range_from_delay(double delay_s, double c) { return c * delay_s / 2.0; }
inline double doppler_from_velocity(double velocity_mps, double c) { return 2.0 * velocity_mps / c; }
inline double velocity_from_doppler(double nu, double c) { return c * nu / 2.0; }

/// Slow-time Doppler ambiguity period in normalized Doppler, 1/(f_c T_sym).
double doppler_alias_period(const OfdmConfig& cfg);

struct Target {
  complex gain{1.0, 0.0};
  double delay_s = 0.0;
  double normalized_doppler = 0.0;
  double angle_deg = 0.0;

  static Target from_physical(complex gain, double range_m, double velocity_mps,
                              double angle_deg, double c = kDefaultSpeedOfLight);
  double range_m(double c = kDefaultSpeedOfLight) const { return range_from_delay(delay_s, c); }
  double velocity_mps(double c = kDefaultSpeedOfLight) const {
    return velocity_from_doppler(normalized_doppler, c);
  }
};

/// SNR |alpha|^2 / sigma^2 in dB -> real positive gain magnitude.
double gain_from_snr_db(double snr_db, double noise_power);

struct Scene {
  std::vector<Target> targets;
  double tx_steer_angle_deg = 30.0;
};

struct SceneCheck {
  Scene scene;
  std::vector<std::string> warnings;
};

/// Enforces tau <= T_cp and K < N_R; |nu| > 0.1/N only produces a warning.
SceneCheck validate_scene(const OfdmConfig& cfg, const Scene& scene);

}  // namespace ofdmrad
