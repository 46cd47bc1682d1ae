#pragma once

#include <complex>
#include <span>

namespace ofdmrad::fft {

enum class Direction { kForward, kInverse };

/// Unnormalized DFT with sign -1 (forward) or +1 (inverse) in the exponent.
/// Any length is accepted. Plans are cached process-wide; execution is
/// thread-safe and bit-reproducible for a given length.
void transform(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
               Direction dir);

/// In-place variant of `transform`.
void transform(std::span<std::complex<double>> data, Direction dir);

}  // namespace ofdmrad::fft
