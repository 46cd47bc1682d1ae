#include "ofdmrad/music.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ofdmrad {

SpatialCovariance scm(const DataCube& cube) {
  const int nr = cube.num_rx();
  SpatialCovariance out{CMatrix::Zero(nr, nr)};
  // R(i, j) = sum_m sum_l conj(y_{i,m}[l]) y_{j,m}[l]; the sum over (l, m) is
  // just the inner product of the two antenna planes.
  for (int i = 0; i < nr; ++i) {
    const auto yi = cube.antenna(i).reshaped();
    for (int j = i; j < nr; ++j) {
      const complex v = yi.dot(cube.antenna(j).reshaped());  // conjugates yi
      out.r(i, j) = v;
      out.r(j, i) = std::conj(v);
    }
    out.r(i, i) = complex(out.r(i, i).real(), 0.0);
  }
  return out;
}

EigenDecomposition herm_eig(const CMatrix& r) {
  if (r.rows() != r.cols()) throw Error(ErrorKind::kNotHermitian, "matrix is not square");
  const double scale = std::max(r.cwiseAbs().maxCoeff(), 1e-300);
  const double asym = (r - r.adjoint()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    std::ostringstream os;
    os << "asymmetry " << asym << " relative to max entry " << scale;
    throw Error(ErrorKind::kNotHermitian, os.str());
  }
  const CMatrix h = 0.5 * (r + r.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::kNotHermitian, "eigensolver did not converge");
  // Eigen returns ascending order.
  EigenDecomposition out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

int estimate_model_order(const RVector& eigenvalues_desc, double gamma) {
  const auto n = static_cast<int>(eigenvalues_desc.size());
  if (n < 2) return 0;
  const int lower_begin = (n + 1) / 2;  // ceil(N_R / 2)
  std::vector<double> lower(eigenvalues_desc.data() + lower_begin, eigenvalues_desc.data() + n);
  std::sort(lower.begin(), lower.end());
  const size_t half = lower.size() / 2;
  const double median = lower.size() % 2 == 1 ? lower[half] : 0.5 * (lower[half - 1] + lower[half]);
  // Guard against an exactly zero floor: scale-relative rounding level.
  const double floor = std::max(median, std::abs(eigenvalues_desc(0)) * 1e-13);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    if (eigenvalues_desc(i) > gamma * floor) ++k;
  }
  return std::min(k, n - 1);
}

std::vector<double> AngleGrid::points() const {
  if (!(step_deg > 0.0) || !(stop_deg > start_deg)) {
    throw Error(ErrorKind::kConfigInvalid, "angle grid needs step > 0 and stop > start");
  }
  std::vector<double> out;
  const auto count = static_cast<long>(std::ceil((stop_deg - start_deg) / step_deg - 1e-9));
  out.reserve(static_cast<size_t>(count));
  for (long k = 0; k < count; ++k) {
    const double theta = start_deg + static_cast<double>(k) * step_deg;
    // Endfire points have no defined steering for the estimators; skip them.
    if (std::abs(theta) >= 90.0) continue;
    out.push_back(theta);
  }
  return out;
}

AngleSpectrum music_spectrum(const EigenDecomposition& eig, int model_order,
                             const std::vector<double>& grid_deg) {
  const auto nr = static_cast<int>(eig.values.size());
  if (model_order < 0 || model_order >= nr) {
    std::ostringstream os;
    os << "model order " << model_order << " leaves no noise subspace for N_R = " << nr;
    throw Error(ErrorKind::kDegenerateNoiseSubspace, os.str());
  }
  const CMatrix un = eig.vectors.rightCols(nr - model_order);
  AngleSpectrum out;
  out.grid_deg = grid_deg;
  out.model_order = model_order;
  out.noise_floor = eig.values.tail(nr - model_order).mean();
  out.values.resize(grid_deg.size());
  for (size_t g = 0; g < grid_deg.size(); ++g) {
    const CVector a = array_steering(grid_deg[g], nr);
    // a^T U_n U_n^H conj(a) = || U_n^H conj(a) ||^2
    const double denom = (un.adjoint() * a.conjugate()).squaredNorm();
    out.values[g] = 1.0 / std::max(denom, 1e-300);
  }
  return out;
}

AngleSpectrum music_spectrum(const CMatrix& r, int model_order, const std::vector<double>& grid_deg) {
  return music_spectrum(herm_eig(r), model_order, grid_deg);
}

std::vector<double> beamforming_spectrum(const CMatrix& r, const std::vector<double>& grid_deg) {
  std::vector<double> out(grid_deg.size());
  for (size_t g = 0; g < grid_deg.size(); ++g) {
    const CVector a = array_steering(grid_deg[g], static_cast<int>(r.rows()));
    out[g] = (a.transpose() * r * a.conjugate())(0).real();
  }
  return out;
}

PeakSet pick_peaks(const AngleSpectrum& spectrum, int count) {
  const auto& v = spectrum.values;
  const auto& grid = spectrum.grid_deg;
  std::vector<size_t> maxima;
  for (size_t k = 1; k + 1 < v.size(); ++k) {
    if (v[k] > v[k - 1] && v[k] > v[k + 1]) maxima.push_back(k);
  }
  std::stable_sort(maxima.begin(), maxima.end(), [&](size_t a, size_t b) { return v[a] > v[b]; });
  PeakSet out;
  const size_t keep = std::min(maxima.size(), static_cast<size_t>(std::max(count, 0)));
  out.fewer_peaks_than_order = maxima.size() < static_cast<size_t>(std::max(count, 0));
  for (size_t p = 0; p < keep; ++p) {
    const size_t k = maxima[p];
    const double y0 = v[k - 1], y1 = v[k], y2 = v[k + 1];
    const double curv = y0 - 2.0 * y1 + y2;
    const double offset = curv < 0.0 ? std::clamp(0.5 * (y0 - y2) / curv, -0.5, 0.5) : 0.0;
    // Grid points are uniform away from the endfire gaps.
    const double step = grid[k + 1] - grid[k];
    out.angles_deg.push_back(grid[k] + offset * step);
    out.values.push_back(y1);
  }
  return out;
}

}  // namespace ofdmrad
