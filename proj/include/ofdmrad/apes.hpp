#pragma once

#include <optional>
#include <vector>

#include "ofdmrad/matrix.hpp"
#include "ofdmrad/synth.hpp"

namespace ofdmrad {

/// Implicit Xbar_m = F_N^H diag(x_m) F_{N,L}. All products run through
/// length-N FFTs; `dense()` exists for cross-checks.
class PilotOperator {
 public:
  PilotOperator(CVector symbol, int taps, bool force_gram_solve = false);

  int size() const { return static_cast<int>(symbol_.size()); }
  int taps() const { return taps_; }
  bool identity_gram() const { return identity_gram_; }

  /// Xbar h (length N).
  CVector apply(const CVector& h) const;
  /// Xbar^H v (length L).
  CVector apply_adjoint(const CVector& v) const;
  /// Xbar^H Xbar (L x L).
  CMatrix gram() const;
  /// (Xbar^H Xbar)^{-1} g; identity for unit-modulus symbols unless forced.
  CVector solve_gram(const CVector& g) const;
  CMatrix dense() const;

  const CVector& symbol() const { return symbol_; }

 private:
  CVector symbol_;
  int taps_;
  bool identity_gram_;
  Eigen::LLT<CMatrix> gram_factor_;
};

/// G_m = Xbar_m^H D^H(nu) Ybar_m (L x N_R).
CMatrix pilot_project(const PilotOperator& pilot, const CVector& ici_conj, const CMatrix& snapshot);
CMatrix pilot_project(const OfdmConfig& cfg, const CVector& symbol, double nu, const CMatrix& snapshot);

/// Residual-covariance machinery for one cube. Precomputes pilot operators and
/// the SCM; every member is const and safe to call concurrently. The cube is
/// held by reference and must outlive the problem.
class CfoProblem {
 public:
  CfoProblem(const OfdmConfig& cfg, const DataCube& cube, const SymbolMatrix& symbols,
             bool force_gram_solve = false);

  const OfdmConfig& config() const { return cfg_; }
  const CMatrix& scm() const { return r_; }
  int taps() const { return taps_; }
  int num_rx() const { return cube_.num_rx(); }

  /// G_m for every symbol m.
  std::vector<CMatrix> projections(double nu) const;
  /// Sigma(nu) = sum_m G_m^H (Xbar_m^H Xbar_m)^{-1} G_m.
  CMatrix sigma(double nu) const;
  /// Q(nu) = R - Sigma(nu), accumulated as the Gram matrix of the
  /// pilot-orthogonal residuals so it is PSD in floating point.
  CMatrix residual(double nu) const;
  /// (Xbar_m^H Xbar_m)^{-1} g for symbol m.
  CVector solve_gram(int m, const CVector& g) const { return pilots_[static_cast<size_t>(m)].solve_gram(g); }

 private:
  OfdmConfig cfg_;
  const DataCube& cube_;
  int taps_;
  std::vector<PilotOperator> pilots_;
  CMatrix r_;
};

CMatrix residual_scm(const OfdmConfig& cfg, const DataCube& cube, const SymbolMatrix& symbols, double nu);

/// conj(Q) + eps I with eps = 1e-8 trace(Q) / N_R, held in eigen-decomposed form.
class LoadedResidual {
 public:
  explicit LoadedResidual(const CMatrix& q);

  /// (conj(Q) + eps I)^{-1} v
  CVector solve(const CVector& v) const;
  double loading() const { return eps_; }
  double condition() const { return cond_; }

 private:
  double eps_;
  double cond_;
  RVector values_;
  CMatrix vectors_;
};

/// a_R^H(theta) (conj(Q) + eps I)^{-1} a_R(theta). Throws kSingularResidual
/// when the loaded matrix has condition number above 1e14.
double cfo_objective(const CMatrix& q, double angle_deg);

/// Constrained minimum-residual beamformer, w^H a_R(theta) = 1.
CVector apes_weights(const CMatrix& q, double angle_deg);

struct CfoSearch {
  double max_velocity_mps = 150.0;
  int coarse_points = 64;
  /// Final bracket width as a fraction of one slow-time velocity bin.
  double resolution_bins = 1e-3;
};

struct CfoEstimate {
  double nu = 0.0;
  double objective = 0.0;
  std::vector<double> grid_nu;         // coarse grid
  std::vector<double> grid_objective;  // objective on the coarse grid
  int evaluations = 0;
};

/// Coarse grid over +/- max velocity, golden-section refinement of the best
/// cell, then one parabolic step through the three best samples.
/// `coarse_residuals`, when given, holds Q(nu) on the coarse grid and lets
/// several angles share that work.
CfoEstimate estimate_cfo(const CfoProblem& problem, double angle_deg, const CfoSearch& search,
                         const std::vector<CMatrix>* coarse_residuals = nullptr);
CfoEstimate estimate_cfo(const OfdmConfig& cfg, const DataCube& cube, const SymbolMatrix& symbols,
                         double angle_deg, const CfoSearch& search = {});

std::vector<double> cfo_grid(const OfdmConfig& cfg, const CfoSearch& search);
std::vector<CMatrix> coarse_residuals(const CfoProblem& problem, const CfoSearch& search);

struct ChannelEstimate {
  CMatrix h;  // L x M
  double angle_deg = 0.0;
  double cfo = 0.0;
  CVector weights;
  CfoEstimate search;
};

/// h_m = (Xbar_m^H Xbar_m)^{-1} Xbar_m^H D^H(nu) Ybar_m conj(w).
ChannelEstimate estimate_channels(const CfoProblem& problem, double nu, double angle_deg, const CVector& weights);

}  // namespace ofdmrad
