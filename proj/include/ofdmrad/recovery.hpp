#pragma once

#include <vector>

#include "ofdmrad/apes.hpp"
#include "ofdmrad/matrix.hpp"
#include "ofdmrad/model.hpp"

namespace ofdmrad {

/// Zero-padded delay-Doppler periodogram magnitude.
///
/// Entry (p, q) is |b^H(tau_p) G c(nu_q)| / sqrt(N M), so an on-grid unit
/// target b c^H peaks at sqrt(N M) and sum |map|^2 = Z_r Z_d ||G||_F^2.
/// Rows run over delay tau_p = p / (Z_r N df) for p = 0..Z_r N - 1. Columns run
/// over the principal slow-time alias interval in ascending order.
struct DelayDopplerMap {
  Eigen::MatrixXd magnitude;
  std::vector<double> delay_axis_s;
  std::vector<double> doppler_axis;  // normalized Doppler
  int zero_pad_delay = 4;
  int zero_pad_doppler = 4;
};

/// G = F_{N,L} H for an L x M tap matrix (N x M result).
CMatrix freq_channel(const CMatrix& taps, int num_subcarriers);

DelayDopplerMap delay_doppler_map(const CMatrix& freq, const OfdmConfig& cfg, int zero_pad_delay = 4,
                                  int zero_pad_doppler = 4);

struct DelayDopplerPeak {
  double delay_s = 0.0;
  double doppler_aliased = 0.0;
  int delay_index = 0;
  int doppler_index = 0;
  double delay_offset = 0.0;    // parabolic offset in padded bins
  double doppler_offset = 0.0;  // parabolic offset in padded bins
  double value = 0.0;
};

/// Global argmax (ties go to the lowest delay index, then lowest Doppler index)
/// refined by separable 3-point parabolas with circular neighbours.
DelayDopplerPeak peak_delay_doppler(const DelayDopplerMap& map, const OfdmConfig& cfg);

/// Adds the integer number of alias periods 1/(f_c T_sym) that brings the
/// slow-time estimate closest to the reference.
double unalias_doppler(double doppler_aliased, double doppler_reference, const OfdmConfig& cfg);

/// Least-squares gain b^H G c / (||F_{N,L}^H b||^2 ||c||^2). With taps = N the
/// denominator is ||b||^2 ||c||^2 = N M; with taps < N it only counts the part
/// of b(tau) that an L-tap channel can represent.
complex gain_estimate(const CMatrix& freq, double delay_s, double doppler, const OfdmConfig& cfg, int taps);

struct TargetEstimate {
  double angle_deg = 0.0;
  double delay_s = 0.0;
  double range_m = 0.0;
  double normalized_doppler = 0.0;  // unaliased headline estimate
  double velocity_mps = 0.0;
  complex gain{0.0, 0.0};
  double cfo_doppler = 0.0;      // step-2 estimate
  double doppler_aliased = 0.0;  // step-3 slow-time estimate before unaliasing
  double peak_value = 0.0;
};

struct Recovery {
  DelayDopplerMap map;
  DelayDopplerPeak peak;
  TargetEstimate estimate;
};

/// Delay, Doppler and gain from one angle's unstructured channel estimate.
Recovery recover_target(const ChannelEstimate& channel, const OfdmConfig& cfg, int zero_pad_delay = 4,
                        int zero_pad_doppler = 4);

}  // namespace ofdmrad
