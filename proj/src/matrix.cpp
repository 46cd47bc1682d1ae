#include "ofdmrad/matrix.hpp"

#include <span>
#include <stdexcept>

namespace ofdmrad {

CMatrix dft_columns(const CMatrix& in, fft::Direction dir, double scale, Eigen::Index length) {
  if (length < 0) length = in.rows();
  if (length < in.rows()) throw std::invalid_argument("dft_columns: length shorter than input");
  CMatrix out = CMatrix::Zero(length, in.cols());
  out.topRows(in.rows()) = in;
  for (Eigen::Index col = 0; col < out.cols(); ++col) {
    fft::transform(std::span<std::complex<double>>(out.col(col).data(), static_cast<size_t>(length)), dir);
  }
  if (scale != 1.0) out *= scale;
  return out;
}

CMatrix dft_rows(const CMatrix& in, fft::Direction dir, double scale, Eigen::Index length) {
  // Rows are strided in column-major storage; transform the transpose instead.
  CMatrix t = in.transpose();
  return dft_columns(t, dir, scale, length).transpose();
}

}  // namespace ofdmrad
