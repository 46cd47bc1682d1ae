#pragma once

#include <optional>
#include <vector>

#include "ofdmrad/matrix.hpp"
#include "ofdmrad/synth.hpp"

namespace ofdmrad {

struct SpatialCovariance {
  CMatrix r;  // N_R x N_R, Hermitian PSD
};

/// R = sum_m Ybar_m^H Ybar_m, unnormalized.
SpatialCovariance scm(const DataCube& cube);

struct EigenDecomposition {
  RVector values;   // descending
  CMatrix vectors;  // column k pairs with values(k)
};

/// Throws Error(kNotHermitian) if max |R - R^H| exceeds 1e-10 * max|R|.
EigenDecomposition herm_eig(const CMatrix& r);

/// Count of eigenvalues above gamma * median of the lower half, capped at N_R - 1.
int estimate_model_order(const RVector& eigenvalues_desc, double gamma = 10.0);

struct AngleGrid {
  double start_deg = -90.0;
  double stop_deg = 90.0;  // exclusive
  double step_deg = 0.1;

  std::vector<double> points() const;
};

struct AngleSpectrum {
  std::vector<double> grid_deg;
  std::vector<double> values;
  double noise_floor = 0.0;  // mean noise-subspace eigenvalue
  int model_order = 0;
};

/// f(theta) = 1 / ||U_n^H conj(a_R(theta))||^2.
AngleSpectrum music_spectrum(const EigenDecomposition& eig, int model_order,
                             const std::vector<double>& grid_deg);
AngleSpectrum music_spectrum(const CMatrix& r, int model_order, const std::vector<double>& grid_deg);

/// a_R(theta)^T R conj(a_R(theta)) on the grid.
std::vector<double> beamforming_spectrum(const CMatrix& r, const std::vector<double>& grid_deg);

struct PeakSet {
  std::vector<double> angles_deg;  // sorted by descending spectrum value
  std::vector<double> values;
  bool fewer_peaks_than_order = false;
};

/// Strict interior local maxima; keeps the largest `count`, each refined by a
/// 3-point parabola through the grid maximum and its neighbours.
PeakSet pick_peaks(const AngleSpectrum& spectrum, int count);

}  // namespace ofdmrad
