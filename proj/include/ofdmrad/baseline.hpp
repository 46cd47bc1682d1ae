#pragma once

#include "ofdmrad/recovery.hpp"
#include "ofdmrad/synth.hpp"

namespace ofdmrad {

/// Fast-time / slow-time matrix after spatial combining (N x M).
struct BeamformedSnapshot {
  CMatrix y;
};

/// y~[l, m] = sum_i conj(a_R(theta)_i) y_{i,m}[l] / N_R.
BeamformedSnapshot rx_beamform(const DataCube& cube, double angle_deg);

struct BaselineResult {
  CMatrix freq;  // symbol-divided frequency-domain channel, N x M
  DelayDopplerMap map;
  DelayDopplerPeak peak;
  TargetEstimate estimate;  // Doppler left on the principal slow-time alias
};

/// Classical OFDM radar periodogram: DFT along fast time, divide by the
/// transmitted symbols, then the same 2-D transform as the APES recovery.
/// Nothing here knows about ICI. Symbols with |x| < 1e-6 are divided by 1e-6
/// in magnitude.
BaselineResult fft2d_estimate(const BeamformedSnapshot& snapshot, const SymbolMatrix& symbols,
                              const OfdmConfig& cfg, int zero_pad_delay = 4, int zero_pad_doppler = 4);

}  // namespace ofdmrad
