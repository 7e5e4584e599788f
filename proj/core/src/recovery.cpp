#include "bspw/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace bspw {

namespace {

template <class Scalar>
double real_dot(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  return std::real((a.array().conjugate() * b.array()).sum());
}

// In-place proximal map of sum_b tau_b ||Z_{V_b}||_F.
template <class Scalar>
void block_prox_inplace(const BlockPartition& partition, const std::vector<double>& tau, Mat<Scalar>& z) {
  for (std::size_t b = 0; b < partition.num_blocks(); ++b) {
    const auto rows = partition.block(b);
    double sq = 0.0;
    for (auto r : rows) sq += z.row(static_cast<Eigen::Index>(r)).squaredNorm();
    const double nrm = std::sqrt(sq);
    const double factor = nrm > tau[b] ? 1.0 - tau[b] / nrm : 0.0;
    for (auto r : rows) z.row(static_cast<Eigen::Index>(r)) *= factor;
  }
}

// Measurement system reduced to an equivalent full-row-rank operator:
//   ||A x - y||^2 = ||S Q^H x - z||^2 + perp_sq
// with Q (n x r) orthonormal columns and S (r x r) upper triangular.
template <class Scalar>
struct Reduction {
  Mat<Scalar> Q;
  Mat<Scalar> S;
  Mat<Scalar> z;
  double perp_sq = 0.0;
  std::size_t rank = 0;
};

template <class Scalar>
Reduction<Scalar> reduce(const Mat<Scalar>& A, const Mat<Scalar>& Y) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  Reduction<Scalar> out;

  // A^H P = Q R  =>  A = P R^H Q^H
  Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(A.adjoint());
  const Eigen::Index r = qr.rank();
  out.rank = static_cast<std::size_t>(r);
  if (r == 0) {
    out.z = Mat<Scalar>::Zero(0, Y.cols());
    out.Q = Mat<Scalar>::Zero(n, 0);
    out.S = Mat<Scalar>::Zero(0, 0);
    out.perp_sq = Y.squaredNorm();
    return out;
  }
  out.Q = qr.householderQ() * Mat<Scalar>::Identity(n, r);
  const Mat<Scalar> R = qr.matrixR().topRows(r).template triangularView<Eigen::Upper>();
  const Mat<Scalar> Yp = qr.colsPermutation().transpose() * Y;
  const Mat<Scalar> M = R.adjoint();  // m x r, full column rank

  Eigen::HouseholderQR<Mat<Scalar>> thin(M);
  const Mat<Scalar> W = thin.householderQ() * Mat<Scalar>::Identity(m, r);
  out.S = thin.matrixQR().topLeftCorner(r, r).template triangularView<Eigen::Upper>();
  out.z = W.adjoint() * Yp;
  out.perp_sq = std::max(0.0, Yp.squaredNorm() - out.z.squaredNorm());
  return out;
}

template <class Scalar>
void check_dims(const BlockPartition& partition, const WeightVector& w, const Mat<Scalar>& A,
                const Mat<Scalar>& Y, double eta) {
  if (A.rows() < 1 || A.cols() < 1) throw std::invalid_argument("recovery: A must be non-empty");
  if (Y.rows() != A.rows()) {
    throw std::invalid_argument("recovery: observation has " + std::to_string(Y.rows()) + " rows, A has " +
                                std::to_string(A.rows()));
  }
  if (Y.cols() < 1) throw std::invalid_argument("recovery: observation has no columns");
  if (partition.dim() != static_cast<std::size_t>(A.cols())) {
    throw std::invalid_argument("recovery: partition dimension " + std::to_string(partition.dim()) +
                                " does not match A with " + std::to_string(A.cols()) + " columns");
  }
  if (w.size() != partition.num_blocks()) throw std::invalid_argument("recovery: weight/block count mismatch");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("recovery: eta must be finite and >= 0");
}

struct Adapter {
  const SolverConfig& cfg;
  int changes = 0;

  // Returns the factor by which rho was multiplied (1 if unchanged).
  double update(int iter, double primal, double dual) {
    if (!cfg.adaptive_rho || iter >= cfg.adapt_until || changes >= 64 || iter % 10 != 0) return 1.0;
    constexpr double mu = 10.0;
    constexpr double factor = 2.0;
    if (primal > mu * dual) {
      ++changes;
      return factor;
    }
    if (dual > mu * primal) {
      ++changes;
      return 1.0 / factor;
    }
    return 1.0;
  }
};

template <class Scalar>
RecoveryResult<Scalar> solve_core(const BlockPartition& partition, const WeightVector& w, const Mat<Scalar>& A,
                                  const Mat<Scalar>& Y, double eta, const SolverConfig& cfg) {
  cfg.validate();
  check_dims(partition, w, A, Y, eta);

  const Eigen::Index n = A.cols();
  const Eigen::Index k = Y.cols();
  const auto red = reduce(A, Y);

  RecoveryResult<Scalar> out;
  out.rank = red.rank;
  auto finish = [&](Mat<Scalar> x) {
    out.objective = weighted_block_norm(partition, w, x);
    out.constraint_residual = (A * x - Y).norm();
    out.x_hat = std::move(x);
    return out;
  };

  const double eta_sq = eta * eta;
  if (eta > 0.0 && red.perp_sq > eta_sq * (1.0 + 1e-12)) {
    throw std::invalid_argument("recovery: noise ball is infeasible; the part of y outside range(A) has norm " +
                                std::to_string(std::sqrt(red.perp_sq)) + " > eta = " + std::to_string(eta));
  }
  const double eta_red = eta > 0.0 ? std::sqrt(std::max(0.0, eta_sq - red.perp_sq)) : 0.0;

  if (red.rank == 0 || (eta > 0.0 && red.z.norm() <= eta_red)) {
    // zero is feasible (or A vanishes): it minimizes every norm
    out.converged = true;
    return finish(Mat<Scalar>::Zero(n, k));
  }

  const Eigen::Index r = static_cast<Eigen::Index>(red.rank);
  const Mat<Scalar>& Q = red.Q;
  const auto S = red.S.template triangularView<Eigen::Upper>();
  const double sqrt_nk = std::sqrt(static_cast<double>(n * k));

  double rho = cfg.rho;
  const double relax = cfg.relaxation;
  std::vector<double> tau(partition.num_blocks());
  auto set_tau = [&] {
    for (std::size_t b = 0; b < tau.size(); ++b) tau[b] = w[b] / rho;
  };
  set_tau();
  Adapter adapter{cfg};

  Mat<Scalar> X = Mat<Scalar>::Zero(n, k);
  Mat<Scalar> Z = Mat<Scalar>::Zero(n, k);
  Mat<Scalar> U = Mat<Scalar>::Zero(n, k);
  Mat<Scalar> Z_old(n, k);

  if (eta == 0.0) {
    // Feasible set {x : Q^H x = c}; projection V - Q (Q^H V - c).
    const Mat<Scalar> c = S.solve(red.z);
    auto project = [&](const Mat<Scalar>& V) -> Mat<Scalar> { return V - Q * (Q.adjoint() * V - c); };

    int it = 0;
    for (; it < cfg.max_iters; ++it) {
      X = project(Z - U);
      Z_old = Z;
      const Mat<Scalar> Xr = relax * X + (1.0 - relax) * Z_old;
      Z = Xr + U;
      block_prox_inplace(partition, tau, Z);
      U += Xr - Z;

      out.primal_residual = (X - Z).norm();
      out.dual_residual = rho * (Z - Z_old).norm();
      if (cfg.record_history) {
        const Mat<Scalar> diff = X - Z;
        out.merit_history.push_back(weighted_block_norm(partition, w, Z) + rho * real_dot(U, diff) -
                                    0.5 * rho * diff.squaredNorm());
      }
      const double eps_pri = sqrt_nk * cfg.abs_tol + cfg.rel_tol * std::max(X.norm(), Z.norm());
      const double eps_dual = sqrt_nk * cfg.abs_tol + cfg.rel_tol * rho * U.norm();
      if (out.primal_residual <= eps_pri && out.dual_residual <= eps_dual) {
        out.converged = true;
        ++it;
        break;
      }
      const double f = adapter.update(it, out.primal_residual, out.dual_residual);
      if (f != 1.0) {
        rho *= f;
        U /= f;
        set_tau();
      }
    }
    out.iterations = it;
    out.final_rho = rho;
    return finish(X);
  }

  // Noise ball: split V = B X with B = S Q^H / s, scaled so ||B||_F = 1.
  const double s = red.S.norm();
  const Mat<Scalar> Bs = red.S / s;  // r x r
  const auto Bt = Bs.template triangularView<Eigen::Upper>();
  const Mat<Scalar> zs = red.z / s;
  const double radius = eta_red / s;
  auto apply_B = [&](const Mat<Scalar>& x) -> Mat<Scalar> { return Bt * (Q.adjoint() * x); };
  auto apply_Bh = [&](const Mat<Scalar>& v) -> Mat<Scalar> { return Q * (Bt.adjoint() * v); };
  auto project_ball = [&](const Mat<Scalar>& v) -> Mat<Scalar> {
    const Mat<Scalar> d = v - zs;
    const double nrm = d.norm();
    return nrm <= radius ? v : Mat<Scalar>(zs + d * (radius / nrm));
  };
  // (I + B^H B)^{-1} = I - Q Q^H + Q (I + Bs^H Bs)^{-1} Q^H
  const Eigen::LLT<Mat<Scalar>> inner(Mat<Scalar>::Identity(r, r) + Bs.adjoint() * Bs);
  auto solve_normal = [&](const Mat<Scalar>& b) -> Mat<Scalar> {
    const Mat<Scalar> u = Q.adjoint() * b;
    return b - Q * (u - inner.solve(u));
  };

  Mat<Scalar> V = Mat<Scalar>::Zero(r, k);
  Mat<Scalar> U2 = Mat<Scalar>::Zero(r, k);
  Mat<Scalar> V_old(r, k);
  const double sqrt_pk = std::sqrt(static_cast<double>((n + r) * k));
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    X = solve_normal(Z - U + apply_Bh(V - U2));
    const Mat<Scalar> BX = apply_B(X);
    Z_old = Z;
    V_old = V;
    const Mat<Scalar> Xr = relax * X + (1.0 - relax) * Z_old;
    const Mat<Scalar> BXr = relax * BX + (1.0 - relax) * V_old;
    Z = Xr + U;
    block_prox_inplace(partition, tau, Z);
    V = project_ball(BXr + U2);
    U += Xr - Z;
    U2 += BXr - V;

    out.primal_residual = std::sqrt((X - Z).squaredNorm() + (BX - V).squaredNorm());
    out.dual_residual = rho * ((Z - Z_old) + apply_Bh(V - V_old)).norm();
    if (cfg.record_history) {
      const Mat<Scalar> d1 = X - Z;
      const Mat<Scalar> d2 = BX - V;
      out.merit_history.push_back(weighted_block_norm(partition, w, Z) + rho * (real_dot(U, d1) + real_dot(U2, d2)) -
                                  0.5 * rho * (d1.squaredNorm() + d2.squaredNorm()));
    }
    const double eps_pri = sqrt_pk * cfg.abs_tol +
                           cfg.rel_tol * std::max(std::sqrt(X.squaredNorm() + BX.squaredNorm()),
                                                  std::sqrt(Z.squaredNorm() + V.squaredNorm()));
    const double eps_dual = sqrt_nk * cfg.abs_tol + cfg.rel_tol * rho * (U + apply_Bh(U2)).norm();
    if (out.primal_residual <= eps_pri && out.dual_residual <= eps_dual) {
      out.converged = true;
      ++it;
      break;
    }
    const double f = adapter.update(it, out.primal_residual, out.dual_residual);
    if (f != 1.0) {
      rho *= f;
      U /= f;
      U2 /= f;
      set_tau();
    }
  }
  out.iterations = it;
  out.final_rho = rho;

  // Pull B X onto the ball with the minimum-norm correction so that the
  // returned point is feasible: x -= B^+ (B x - P(B x)), B^+ = Q Bs^{-1}.
  const Mat<Scalar> BX = apply_B(X);
  const Mat<Scalar> gap = BX - project_ball(BX);
  X -= Q * Bt.solve(gap);
  return finish(X);
}

} // namespace

void SolverConfig::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("solver: rho must be > 0");
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw std::invalid_argument("solver: tolerances must be > 0");
  if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
  if (!(relaxation > 0.0 && relaxation < 2.0)) throw std::invalid_argument("solver: relaxation must lie in (0, 2)");
}

template <class Scalar>
void MeasurementSystem<Scalar>::validate() const {
  if (A.rows() < 1 || A.cols() < 1) throw std::invalid_argument("measurement system: A is empty");
  if (y.rows() != A.rows()) throw std::invalid_argument("measurement system: y length does not match A rows");
  if (!(eta >= 0.0)) throw std::invalid_argument("measurement system: eta must be >= 0");
}

template <class Scalar>
Vec<Scalar> block_soft_threshold(const Vec<Scalar>& v, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("block_soft_threshold: tau must be >= 0");
  const double nrm = v.norm();
  if (nrm <= tau) return Vec<Scalar>::Zero(v.size());
  return v * (1.0 - tau / nrm);
}

template <class Scalar>
double weighted_block_norm(const BlockPartition& partition, const WeightVector& w, const Mat<Scalar>& x) {
  if (partition.dim() != static_cast<std::size_t>(x.rows())) {
    throw std::invalid_argument("weighted_block_norm: dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t b = 0; b < partition.num_blocks(); ++b) {
    double sq = 0.0;
    for (auto r : partition.block(b)) sq += x.row(static_cast<Eigen::Index>(r)).squaredNorm();
    total += w[b] * std::sqrt(sq);
  }
  return total;
}

template <class Scalar>
RecoveryResult<Scalar> solve_weighted(const BlockPartition& partition, const WeightVector& w,
                                      const MeasurementSystem<Scalar>& sys, const SolverConfig& cfg) {
  sys.validate();
  if (sys.y.cols() != 1) throw std::invalid_argument("solve_weighted: y must be a single column; use solve_mmv");
  return solve_core(partition, w, sys.A, sys.y, sys.eta, cfg);
}

template <class Scalar>
RecoveryResult<Scalar> solve_mmv(const BlockPartition& rows, const WeightVector& w, const Mat<Scalar>& A,
                                 const Mat<Scalar>& Y, double eta, const SolverConfig& cfg) {
  return solve_core(rows, w, A, Y, eta, cfg);
}

template <class Scalar>
double relative_error(const Mat<Scalar>& x_hat, const Mat<Scalar>& x_true) {
  if (x_hat.rows() != x_true.rows() || x_hat.cols() != x_true.cols()) {
    throw std::invalid_argument("relative_error: shape mismatch");
  }
  const double ref = x_true.norm();
  if (!(ref > 0.0)) throw std::invalid_argument("relative_error: ground truth is zero");
  return (x_hat - x_true).norm() / ref;
}

template <class Scalar>
bool success(const Mat<Scalar>& x_hat, const Mat<Scalar>& x_true, double threshold) {
  return relative_error(x_hat, x_true) <= threshold;
}

#define BSPW_INSTANTIATE(S)                                                                                \
  template struct MeasurementSystem<S>;                                                                    \
  template Vec<S> block_soft_threshold<S>(const Vec<S>&, double);                                          \
  template double weighted_block_norm<S>(const BlockPartition&, const WeightVector&, const Mat<S>&);       \
  template RecoveryResult<S> solve_weighted<S>(const BlockPartition&, const WeightVector&,                 \
                                               const MeasurementSystem<S>&, const SolverConfig&);          \
  template RecoveryResult<S> solve_mmv<S>(const BlockPartition&, const WeightVector&, const Mat<S>&,       \
                                          const Mat<S>&, double, const SolverConfig&);                     \
  template double relative_error<S>(const Mat<S>&, const Mat<S>&);                                         \
  template bool success<S>(const Mat<S>&, const Mat<S>&, double);

BSPW_INSTANTIATE(double)
BSPW_INSTANTIATE(std::complex<double>)

#undef BSPW_INSTANTIATE

} // namespace bspw
