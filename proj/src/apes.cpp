#include "ofdmrad/apes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>

#include "ofdmrad/music.hpp"

namespace ofdmrad {

namespace {

std::span<complex> as_span(CVector& v) { return {v.data(), static_cast<size_t>(v.size())}; }

// Unitary forward / inverse DFT in place.
void unitary(CVector& v, fft::Direction dir) {
  fft::transform(as_span(v), dir);
  v *= 1.0 / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace

PilotOperator::PilotOperator(CVector symbol, int taps, bool force_gram_solve)
    : symbol_(std::move(symbol)), taps_(taps) {
  if (taps_ < 1 || taps_ > size()) throw Error(ErrorKind::kConfigInvalid, "pilot taps must lie in [1, N]");
  bool unit = true;
  for (Eigen::Index n = 0; n < symbol_.size(); ++n) {
    if (std::abs(std::abs(symbol_(n)) - 1.0) > 1e-12) {
      unit = false;
      break;
    }
  }
  identity_gram_ = unit && !force_gram_solve;
  if (!identity_gram_) {
    gram_factor_.compute(gram());
    if (gram_factor_.info() != Eigen::Success) {
      throw Error(ErrorKind::kConfigInvalid, "pilot Gram matrix is not positive definite");
    }
  }
}

CVector PilotOperator::apply(const CVector& h) const {
  CVector v = CVector::Zero(size());
  v.head(taps_) = h;
  unitary(v, fft::Direction::kForward);
  v.array() *= symbol_.array();
  unitary(v, fft::Direction::kInverse);
  return v;
}

CVector PilotOperator::apply_adjoint(const CVector& v) const {
  CVector w = v;
  unitary(w, fft::Direction::kForward);
  w.array() *= symbol_.array().conjugate();
  unitary(w, fft::Direction::kInverse);
  return w.head(taps_);
}

CMatrix PilotOperator::gram() const {
  // [X^H X]_{ab} = (1/N) sum_n |x_n|^2 exp(j 2 pi n (a - b) / N)
  const int n = size();
  CVector g = symbol_.cwiseAbs2().cast<complex>();
  fft::transform(as_span(g), fft::Direction::kInverse);
  g /= static_cast<double>(n);
  CMatrix out(taps_, taps_);
  for (int a = 0; a < taps_; ++a) {
    for (int b = 0; b < taps_; ++b) out(a, b) = g(((a - b) % n + n) % n);
  }
  return out;
}

CVector PilotOperator::solve_gram(const CVector& g) const {
  if (identity_gram_) return g;
  return gram_factor_.solve(g);
}

CMatrix PilotOperator::dense() const {
  const int n = size();
  CMatrix f(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) f(r, c) = s * std::polar(1.0, -kTwoPi * (static_cast<double>(r) * c) / n);
  }
  return f.adjoint() * symbol_.asDiagonal() * f.leftCols(taps_);
}

CMatrix pilot_project(const PilotOperator& pilot, const CVector& ici_conj, const CMatrix& snapshot) {
  CMatrix g(pilot.taps(), snapshot.cols());
  for (Eigen::Index i = 0; i < snapshot.cols(); ++i) {
    const CVector col = ici_conj.cwiseProduct(snapshot.col(i));
    g.col(i) = pilot.apply_adjoint(col);
  }
  return g;
}

CMatrix pilot_project(const OfdmConfig& cfg, const CVector& symbol, double nu, const CMatrix& snapshot) {
  const PilotOperator pilot(symbol, cfg.taps());
  return pilot_project(pilot, ici_phase(cfg, nu).conjugate(), snapshot);
}

CfoProblem::CfoProblem(const OfdmConfig& cfg, const DataCube& cube, const SymbolMatrix& symbols,
                       bool force_gram_solve)
    : cfg_(cfg), cube_(cube), taps_(cfg.taps()) {
  validate_config(cfg_);
  if (cube.num_samples() != cfg.num_subcarriers || cube.num_symbols() != cfg.num_symbols ||
      cube.num_rx() != cfg.num_rx) {
    throw Error(ErrorKind::kConfigInvalid, "cube dimensions do not match configuration");
  }
  if (symbols.x.rows() != cfg.num_subcarriers || symbols.x.cols() != cfg.num_symbols) {
    throw Error(ErrorKind::kConfigInvalid, "symbol dimensions do not match configuration");
  }
  pilots_.reserve(static_cast<size_t>(cfg.num_symbols));
  for (int m = 0; m < cfg.num_symbols; ++m) pilots_.emplace_back(symbols.x.col(m), taps_, force_gram_solve);
  r_ = ofdmrad::scm(cube).r;
}

std::vector<CMatrix> CfoProblem::projections(double nu) const {
  const CVector dconj = ici_phase(cfg_, nu).conjugate();
  std::vector<CMatrix> out;
  out.reserve(pilots_.size());
  for (int m = 0; m < cfg_.num_symbols; ++m) {
    out.push_back(pilot_project(pilots_[static_cast<size_t>(m)], dconj, cube_.snapshot(m)));
  }
  return out;
}

CMatrix CfoProblem::sigma(double nu) const {
  const int nr = num_rx();
  CMatrix s = CMatrix::Zero(nr, nr);
  const std::vector<CMatrix> g = projections(nu);
  for (int m = 0; m < cfg_.num_symbols; ++m) {
    const PilotOperator& p = pilots_[static_cast<size_t>(m)];
    const CMatrix& gm = g[static_cast<size_t>(m)];
    CMatrix solved(gm.rows(), gm.cols());
    for (Eigen::Index i = 0; i < gm.cols(); ++i) solved.col(i) = p.solve_gram(gm.col(i));
    s.noalias() += gm.adjoint() * solved;
  }
  return 0.5 * (s + s.adjoint());
}

CMatrix CfoProblem::residual(double nu) const {
  const int n = cfg_.num_subcarriers;
  const int nr = num_rx();
  const CVector dconj = ici_phase(cfg_, nu).conjugate();
  CMatrix q = CMatrix::Zero(nr, nr);
  CMatrix resid(n, nr);  // frequency-domain residual of one symbol
  CVector z(n), t(n);
  for (int m = 0; m < cfg_.num_symbols; ++m) {
    const PilotOperator& p = pilots_[static_cast<size_t>(m)];
    const CVector& x = p.symbol();
    for (int i = 0; i < nr; ++i) {
      // z = F D^H y, t = F^H diag(conj x) z -> first L taps are G_m(:, i)
      z = dconj.cwiseProduct(cube_.antenna(i).col(m));
      unitary(z, fft::Direction::kForward);
      t = x.conjugate().cwiseProduct(z);
      unitary(t, fft::Direction::kInverse);
      CVector h = p.solve_gram(t.head(taps_));
      // F Xbar h = diag(x) F_{N,L} h
      t.setZero();
      t.head(taps_) = h;
      unitary(t, fft::Direction::kForward);
      resid.col(i) = z - x.cwiseProduct(t);
    }
    q.noalias() += resid.adjoint() * resid;
  }
  return 0.5 * (q + q.adjoint());
}

CMatrix residual_scm(const OfdmConfig& cfg, const DataCube& cube, const SymbolMatrix& symbols, double nu) {
  return CfoProblem(cfg, cube, symbols).residual(nu);
}

LoadedResidual::LoadedResidual(const CMatrix& q) {
  const auto nr = static_cast<double>(q.rows());
  eps_ = 1e-8 * q.trace().real() / nr;
  CMatrix loaded = q.conjugate();
  loaded.diagonal().array() += eps_;
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(loaded);
  values_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
  const double lo = values_.minCoeff();
  const double hi = values_.maxCoeff();
  cond_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(cond_ <= 1e14)) {
    std::ostringstream os;
    os << "loaded residual covariance has condition number " << cond_;
    throw Error(ErrorKind::kSingularResidual, os.str());
  }
}

CVector LoadedResidual::solve(const CVector& v) const {
  CVector y = vectors_.adjoint() * v;
  y.array() /= values_.array().cast<complex>();
  return vectors_ * y;
}

double cfo_objective(const CMatrix& q, double angle_deg) {
  const LoadedResidual loaded(q);
  const CVector a = array_steering(angle_deg, static_cast<int>(q.rows()));
  return a.dot(loaded.solve(a)).real();
}

CVector apes_weights(const CMatrix& q, double angle_deg) {
  const LoadedResidual loaded(q);
  const CVector a = array_steering(angle_deg, static_cast<int>(q.rows()));
  const CVector num = loaded.solve(a);
  return num / a.dot(num).real();
}

std::vector<double> cfo_grid(const OfdmConfig& cfg, const CfoSearch& search) {
  if (search.coarse_points < 3) throw Error(ErrorKind::kConfigInvalid, "CFO search needs >= 3 coarse points");
  if (!(search.max_velocity_mps > 0.0)) throw Error(ErrorKind::kConfigInvalid, "CFO search range must be > 0");
  const double nu_max = doppler_from_velocity(search.max_velocity_mps, cfg.speed_of_light_mps);
  std::vector<double> grid(static_cast<size_t>(search.coarse_points));
  const double step = 2.0 * nu_max / (search.coarse_points - 1);
  for (int k = 0; k < search.coarse_points; ++k) grid[static_cast<size_t>(k)] = -nu_max + step * k;
  return grid;
}

std::vector<CMatrix> coarse_residuals(const CfoProblem& problem, const CfoSearch& search) {
  std::vector<CMatrix> out;
  for (double nu : cfo_grid(problem.config(), search)) out.push_back(problem.residual(nu));
  return out;
}

CfoEstimate estimate_cfo(const CfoProblem& problem, double angle_deg, const CfoSearch& search,
                         const std::vector<CMatrix>* coarse) {
  const OfdmConfig& cfg = problem.config();
  CfoEstimate est;
  est.grid_nu = cfo_grid(cfg, search);
  const size_t count = est.grid_nu.size();
  if (coarse != nullptr && coarse->size() != count) {
    throw Error(ErrorKind::kConfigInvalid, "precomputed coarse residuals do not match the CFO grid");
  }
  auto objective = [&](double nu) {
    ++est.evaluations;
    return cfo_objective(problem.residual(nu), angle_deg);
  };
  est.grid_objective.resize(count);
  for (size_t k = 0; k < count; ++k) {
    est.grid_objective[k] = coarse ? cfo_objective((*coarse)[k], angle_deg) : objective(est.grid_nu[k]);
  }
  const auto best = static_cast<size_t>(
      std::max_element(est.grid_objective.begin(), est.grid_objective.end()) - est.grid_objective.begin());

  const DerivedParams d = derive(cfg);
  const double resolution =
      doppler_from_velocity(search.resolution_bins * d.velocity_bin_mps, cfg.speed_of_light_mps);

  // Golden-section on the two cells around the coarse maximum.
  double lo = est.grid_nu[best > 0 ? best - 1 : 0];
  double hi = est.grid_nu[std::min(best + 1, count - 1)];
  double best_nu = est.grid_nu[best];
  double best_val = est.grid_objective[best];
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > resolution) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = objective(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = objective(x1);
    }
  }
  if (f1 > best_val) {
    best_val = f1;
    best_nu = x1;
  }
  if (f2 > best_val) {
    best_val = f2;
    best_nu = x2;
  }

  // Parabolic step through the final bracket.
  const double xm = 0.5 * (lo + hi);
  const double fl = objective(lo);
  const double fm = objective(xm);
  const double fh = objective(hi);
  const double curv = fl - 2.0 * fm + fh;
  for (auto [x, f] : {std::pair{lo, fl}, std::pair{xm, fm}, std::pair{hi, fh}}) {
    if (f > best_val) {
      best_val = f;
      best_nu = x;
    }
  }
  if (curv < 0.0) {
    const double half = 0.5 * (hi - lo);
    const double xp = xm + std::clamp(0.5 * (fl - fh) / curv, -1.0, 1.0) * half;
    const double fp = objective(xp);
    if (fp > best_val) {
      best_val = fp;
      best_nu = xp;
    }
  }
  est.nu = best_nu;
  est.objective = best_val;
  return est;
}

CfoEstimate estimate_cfo(const OfdmConfig& cfg, const DataCube& cube, const SymbolMatrix& symbols,
                         double angle_deg, const CfoSearch& search) {
  const CfoProblem problem(cfg, cube, symbols);
  return estimate_cfo(problem, angle_deg, search);
}

ChannelEstimate estimate_channels(const CfoProblem& problem, double nu, double angle_deg, const CVector& weights) {
  const OfdmConfig& cfg = problem.config();
  const std::vector<CMatrix> g = problem.projections(nu);
  ChannelEstimate out;
  out.h.resize(problem.taps(), cfg.num_symbols);
  out.angle_deg = angle_deg;
  out.cfo = nu;
  out.weights = weights;
  const CVector wc = weights.conjugate();
  for (int m = 0; m < cfg.num_symbols; ++m) {
    const CVector gm = g[static_cast<size_t>(m)] * wc;
    out.h.col(m) = problem.solve_gram(m, gm);
  }
  return out;
}

}  // namespace ofdmrad
