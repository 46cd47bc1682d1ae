#include "ofdmrad/baseline.hpp"

#include <cmath>

namespace ofdmrad {

BeamformedSnapshot rx_beamform(const DataCube& cube, double angle_deg) {
  const CVector a = array_steering(angle_deg, cube.num_rx());
  BeamformedSnapshot out{CMatrix::Zero(cube.num_samples(), cube.num_symbols())};
  for (int i = 0; i < cube.num_rx(); ++i) out.y += std::conj(a(i)) * cube.antenna(i);
  out.y /= static_cast<double>(cube.num_rx());
  return out;
}

BaselineResult fft2d_estimate(const BeamformedSnapshot& snapshot, const SymbolMatrix& symbols,
                              const OfdmConfig& cfg, int zero_pad_delay, int zero_pad_doppler) {
  if (snapshot.y.rows() != symbols.x.rows() || snapshot.y.cols() != symbols.x.cols()) {
    throw Error(ErrorKind::kConfigInvalid, "snapshot and symbol dimensions differ");
  }
  BaselineResult out;
  out.freq = dft_columns(snapshot.y, fft::Direction::kForward, 1.0 / std::sqrt(static_cast<double>(snapshot.y.rows())));
  constexpr double kFloor = 1e-6;
  for (Eigen::Index m = 0; m < out.freq.cols(); ++m) {
    for (Eigen::Index n = 0; n < out.freq.rows(); ++n) {
      complex x = symbols.x(n, m);
      if (std::abs(x) < kFloor) x = std::abs(x) > 0.0 ? x * (kFloor / std::abs(x)) : complex(kFloor, 0.0);
      out.freq(n, m) /= x;
    }
  }
  out.map = delay_doppler_map(out.freq, cfg, zero_pad_delay, zero_pad_doppler);
  out.peak = peak_delay_doppler(out.map, cfg);
  TargetEstimate& e = out.estimate;
  const double c = cfg.speed_of_light_mps;
  e.delay_s = out.peak.delay_s;
  e.range_m = range_from_delay(e.delay_s, c);
  e.doppler_aliased = out.peak.doppler_aliased;
  e.normalized_doppler = out.peak.doppler_aliased;
  e.velocity_mps = velocity_from_doppler(e.normalized_doppler, c);
  e.gain = gain_estimate(out.freq, e.delay_s, e.normalized_doppler, cfg, cfg.num_subcarriers);
  e.peak_value = out.peak.value;
  return out;
}

}  // namespace ofdmrad
