#include "ofdmrad/recovery.hpp"

#include <algorithm>
#include <cmath>

#include "ofdmrad/synth.hpp"

namespace ofdmrad {

CMatrix freq_channel(const CMatrix& taps, int num_subcarriers) {
  if (taps.rows() > num_subcarriers) throw Error(ErrorKind::kConfigInvalid, "more taps than subcarriers");
  return dft_columns(taps, fft::Direction::kForward, 1.0 / std::sqrt(static_cast<double>(num_subcarriers)),
                     num_subcarriers);
}

DelayDopplerMap delay_doppler_map(const CMatrix& freq, const OfdmConfig& cfg, int zero_pad_delay,
                                  int zero_pad_doppler) {
  if (zero_pad_delay < 1 || zero_pad_doppler < 1) throw Error(ErrorKind::kConfigInvalid, "zero-pad factors must be >= 1");
  const auto n = freq.rows();
  const auto m = freq.cols();
  const Eigen::Index rows = zero_pad_delay * n;
  const Eigen::Index cols = zero_pad_doppler * m;
  // Delay: exp(+j 2 pi n p / (Z_r N)) matches b(tau). Doppler: exp(-j 2 pi m q / (Z_d M)) matches c(nu).
  const CMatrix delay = dft_columns(freq, fft::Direction::kInverse, 1.0, rows);
  const CMatrix full = dft_rows(delay, fft::Direction::kForward, 1.0 / std::sqrt(static_cast<double>(n * m)), cols);

  DelayDopplerMap map;
  map.zero_pad_delay = zero_pad_delay;
  map.zero_pad_doppler = zero_pad_doppler;
  map.magnitude.resize(rows, cols);
  const Eigen::Index half = cols / 2;
  for (Eigen::Index j = 0; j < cols; ++j) {
    const Eigen::Index bin = (j - half + cols) % cols;  // fftshift
    map.magnitude.col(j) = full.col(bin).cwiseAbs();
  }
  const double df = cfg.subcarrier_spacing_hz();
  map.delay_axis_s.resize(static_cast<size_t>(rows));
  for (Eigen::Index p = 0; p < rows; ++p) map.delay_axis_s[static_cast<size_t>(p)] = static_cast<double>(p) / (rows * df);
  const double period = doppler_alias_period(cfg);
  map.doppler_axis.resize(static_cast<size_t>(cols));
  for (Eigen::Index j = 0; j < cols; ++j) {
    map.doppler_axis[static_cast<size_t>(j)] = static_cast<double>(j - half) / static_cast<double>(cols) * period;
  }
  return map;
}

namespace {

double parabolic_offset(double y0, double y1, double y2) {
  const double curv = y0 - 2.0 * y1 + y2;
  if (!(curv < 0.0)) return 0.0;
  return std::clamp(0.5 * (y0 - y2) / curv, -0.5, 0.5);
}

}  // namespace

DelayDopplerPeak peak_delay_doppler(const DelayDopplerMap& map, const OfdmConfig& cfg) {
  const Eigen::Index rows = map.magnitude.rows();
  const Eigen::Index cols = map.magnitude.cols();
  DelayDopplerPeak pk;
  double best = -1.0;
  for (Eigen::Index p = 0; p < rows; ++p) {
    for (Eigen::Index q = 0; q < cols; ++q) {
      if (map.magnitude(p, q) > best) {
        best = map.magnitude(p, q);
        pk.delay_index = static_cast<int>(p);
        pk.doppler_index = static_cast<int>(q);
      }
    }
  }
  const Eigen::Index p = pk.delay_index;
  const Eigen::Index q = pk.doppler_index;
  pk.value = best;
  pk.delay_offset = parabolic_offset(map.magnitude((p - 1 + rows) % rows, q), best, map.magnitude((p + 1) % rows, q));
  pk.doppler_offset = parabolic_offset(map.magnitude(p, (q - 1 + cols) % cols), best, map.magnitude(p, (q + 1) % cols));

  const double df = cfg.subcarrier_spacing_hz();
  pk.delay_s = (static_cast<double>(p) + pk.delay_offset) / (static_cast<double>(rows) * df);
  const double period = doppler_alias_period(cfg);
  double frac = (static_cast<double>(q - cols / 2) + pk.doppler_offset) / static_cast<double>(cols);
  frac -= std::floor(frac + 0.5);
  pk.doppler_aliased = frac * period;
  return pk;
}

double unalias_doppler(double doppler_aliased, double doppler_reference, const OfdmConfig& cfg) {
  const double period = doppler_alias_period(cfg);
  const double k = std::round((doppler_reference - doppler_aliased) / period);
  return doppler_aliased + k * period;
}

complex gain_estimate(const CMatrix& freq, double delay_s, double doppler, const OfdmConfig& cfg, int taps) {
  const CVector b = freq_steering(cfg, delay_s);
  const CVector c = temporal_steering(cfg, doppler);
  const complex num = b.dot(freq * c);  // b^H G c
  double b_energy = static_cast<double>(b.size());
  if (taps < b.size()) {
    // ||F_{N,L}^H b||^2: energy of the first L taps of the unitary inverse DFT of b.
    CVector t = b;
    fft::transform(std::span<complex>(t.data(), static_cast<size_t>(t.size())), fft::Direction::kInverse);
    b_energy = t.head(taps).squaredNorm() / static_cast<double>(b.size());
  }
  return num / (b_energy * c.squaredNorm());
}

Recovery recover_target(const ChannelEstimate& channel, const OfdmConfig& cfg, int zero_pad_delay,
                        int zero_pad_doppler) {
  Recovery out;
  const CMatrix g = freq_channel(channel.h, cfg.num_subcarriers);
  out.map = delay_doppler_map(g, cfg, zero_pad_delay, zero_pad_doppler);
  out.peak = peak_delay_doppler(out.map, cfg);
  TargetEstimate& e = out.estimate;
  const double c = cfg.speed_of_light_mps;
  e.angle_deg = channel.angle_deg;
  e.delay_s = out.peak.delay_s;
  e.range_m = range_from_delay(e.delay_s, c);
  e.cfo_doppler = channel.cfo;
  e.doppler_aliased = out.peak.doppler_aliased;
  e.normalized_doppler = unalias_doppler(out.peak.doppler_aliased, channel.cfo, cfg);
  e.velocity_mps = velocity_from_doppler(e.normalized_doppler, c);
  e.gain = gain_estimate(g, e.delay_s, e.normalized_doppler, cfg, static_cast<int>(channel.h.rows()));
  e.peak_value = out.peak.value;
  return out;
}

}  // namespace ofdmrad
