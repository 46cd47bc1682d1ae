#include "ofdmrad/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ofdmrad {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigInvalid: return "ConfigInvalid";
    case ErrorKind::kDelayExceedsCp: return "DelayExceedsCp";
    case ErrorKind::kTooManyTargets: return "TooManyTargets";
    case ErrorKind::kNotHermitian: return "NotHermitian";
    case ErrorKind::kDegenerateNoiseSubspace: return "DegenerateNoiseSubspace";
    case ErrorKind::kSingularResidual: return "SingularResidual";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

int OfdmConfig::max_taps() const {
  // N * T_cp / T with a small guard so that exact ratios such as 512 survive rounding.
  return static_cast<int>(std::floor(num_subcarriers * cp_duration_s / elementary_duration_s() + 1e-9));
}

int OfdmConfig::taps() const {
  return channel_taps > 0 ? channel_taps : std::min(max_taps(), 128);
}

OfdmConfig OfdmConfig::full() {
  OfdmConfig cfg;
  cfg.num_subcarriers = 2048;
  cfg.num_symbols = 64;
  cfg.cp_duration_s = cfg.elementary_duration_s() / 4.0;
  return cfg;
}

OfdmConfig OfdmConfig::desk() {
  OfdmConfig cfg;
  cfg.num_subcarriers = 256;
  cfg.num_symbols = 16;
  cfg.cp_duration_s = cfg.elementary_duration_s() / 4.0;
  return cfg;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::kConfigInvalid, msg); }

}  // namespace

void validate_config(const OfdmConfig& cfg) {
  if (!(cfg.carrier_freq_hz > 0.0) || !std::isfinite(cfg.carrier_freq_hz)) invalid("carrier_freq_hz must be > 0");
  if (!(cfg.bandwidth_hz > 0.0) || !std::isfinite(cfg.bandwidth_hz)) invalid("bandwidth_hz must be > 0");
  if (cfg.num_subcarriers < 2) invalid("num_subcarriers must be >= 2");
  if (cfg.num_symbols < 1) invalid("num_symbols must be >= 1");
  if (!(cfg.cp_duration_s > 0.0) || !std::isfinite(cfg.cp_duration_s)) invalid("cp_duration_s must be > 0");
  if (cfg.num_tx < 1) invalid("num_tx must be >= 1");
  if (cfg.num_rx < 1) invalid("num_rx must be >= 1");
  if (!(cfg.noise_power >= 0.0) || !std::isfinite(cfg.noise_power)) invalid("noise_power must be >= 0");
  if (!(cfg.speed_of_light_mps > 0.0)) invalid("speed_of_light_mps must be > 0");
  const int max_taps = cfg.max_taps();
  if (max_taps < 1) invalid("cyclic prefix shorter than one sample");
  if (cfg.channel_taps < 0) invalid("channel_taps must be >= 0");
  if (cfg.taps() > max_taps) {
    std::ostringstream os;
    os << "channel_taps " << cfg.taps() << " exceeds floor(N*T_cp/T) = " << max_taps;
    invalid(os.str());
  }
  if (cfg.taps() > cfg.num_subcarriers) invalid("channel_taps exceeds num_subcarriers");
}

DerivedParams derive(const OfdmConfig& cfg) {
  validate_config(cfg);
  DerivedParams d{};
  d.subcarrier_spacing_hz = cfg.subcarrier_spacing_hz();
  d.elementary_duration_s = cfg.elementary_duration_s();
  d.symbol_duration_s = cfg.symbol_duration_s();
  d.lambda_m = cfg.wavelength_m();
  d.elem_spacing_m = d.lambda_m / 2.0;
  d.range_bin_m = cfg.speed_of_light_mps / (2.0 * cfg.bandwidth_hz);
  d.velocity_bin_mps = d.lambda_m / (2.0 * cfg.num_symbols * d.symbol_duration_s);
  d.max_unambiguous_velocity_mps = d.lambda_m / (4.0 * d.symbol_duration_s);
  d.max_range_m = cfg.speed_of_light_mps * cfg.cp_duration_s / 2.0;
  d.max_taps = cfg.max_taps();
  return d;
}

double doppler_alias_period(const OfdmConfig& cfg) {
  return 1.0 / (cfg.carrier_freq_hz * cfg.symbol_duration_s());
}

Target Target::from_physical(complex gain, double range_m, double velocity_mps, double angle_deg,
                             double c) {
  Target t;
  t.gain = gain;
  t.delay_s = delay_from_range(range_m, c);
  t.normalized_doppler = doppler_from_velocity(velocity_mps, c);
  t.angle_deg = angle_deg;
  return t;
}

double gain_from_snr_db(double snr_db, double noise_power) {
  return std::sqrt(std::pow(10.0, snr_db / 10.0) * noise_power);
}

SceneCheck validate_scene(const OfdmConfig& cfg, const Scene& scene) {
  validate_config(cfg);
  SceneCheck out{scene, {}};
  const auto k = static_cast<int>(scene.targets.size());
  if (!(std::abs(scene.tx_steer_angle_deg) < 90.0)) invalid("tx_steer_angle_deg must lie in (-90, 90)");
  for (int i = 0; i < k; ++i) {
    const Target& t = scene.targets[i];
    std::ostringstream idx;
    idx << "target " << i;
    if (!std::isfinite(t.delay_s) || t.delay_s < 0.0) invalid(idx.str() + ": delay must be finite and >= 0");
    if (!std::isfinite(t.normalized_doppler)) invalid(idx.str() + ": Doppler must be finite");
    if (!(std::abs(t.angle_deg) < 90.0)) invalid(idx.str() + ": angle must lie in (-90, 90)");
    if (t.delay_s > cfg.cp_duration_s) {
      std::ostringstream os;
      os << idx.str() << ": delay " << t.delay_s << " s exceeds T_cp " << cfg.cp_duration_s << " s";
      throw Error(ErrorKind::kDelayExceedsCp, os.str());
    }
    if (std::abs(t.normalized_doppler) > 0.1 / cfg.num_subcarriers) {
      std::ostringstream os;
      os << idx.str() << ": |nu| = " << std::abs(t.normalized_doppler)
         << " exceeds 0.1/N; the small-Doppler model assumption is violated";
      out.warnings.push_back(os.str());
    }
    for (int j = 0; j < i; ++j) {
      if (scene.targets[j].angle_deg == t.angle_deg) invalid(idx.str() + ": duplicate target angle");
    }
  }
  if (k >= cfg.num_rx) {
    std::ostringstream os;
    os << "K = " << k << " targets requires N_R > K, but N_R = " << cfg.num_rx;
    throw Error(ErrorKind::kTooManyTargets, os.str());
  }
  return out;
}

}  // namespace ofdmrad
