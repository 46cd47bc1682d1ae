#pragma once

#include <Eigen/Dense>

#include "ofdmrad/fft.hpp"

namespace ofdmrad {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

/// Column-wise DFT of length `length` (>= rows, zero-padded), scaled by `scale`.
CMatrix dft_columns(const CMatrix& in, fft::Direction dir, double scale, Eigen::Index length = -1);

/// Row-wise DFT of length `length` (>= cols, zero-padded), scaled by `scale`.
CMatrix dft_rows(const CMatrix& in, fft::Direction dir, double scale, Eigen::Index length = -1);

}  // namespace ofdmrad
