#pragma once

// Weighted block-sparse recovery:
//
//   minimize   sum_b w_b ||Z_{V_b}||_F   subject to  ||A Z - Y||_F <= eta
//
// for real or complex data. Blocks are sets of rows of Z, so a single
// measurement vector (Z with one column) and the joint-sparse multiple
// measurement case share one solver. eta = 0 selects the equality-constrained
// program; inconsistent equality systems are solved in the least-squares sense.
//
// The solver is ADMM on the splitting X = Z, where X carries the constraint and
// Z the block-norm proximal map. Before iterating, A is reduced to an
// equivalent full-row-rank operator with a column-pivoted QR of A^H, so rank
// deficient and redundant measurement rows are handled transparently.

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "bspw/model.hpp"

namespace bspw {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct SolverConfig {
  double rho = 1.0;
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  int max_iters = 10000;
  /// Over-relaxation factor in (0, 2); 1 is plain ADMM.
  double relaxation = 1.6;
  /// Residual balancing: rescale rho when primal and dual residuals differ by
  /// more than a factor of 10. Stops adapting after `adapt_until` iterations.
  bool adaptive_rho = true;
  int adapt_until = 2000;
  /// Record the augmented-Lagrangian merit every iteration.
  bool record_history = false;

  void validate() const;
};

template <class Scalar>
struct MeasurementSystem {
  Mat<Scalar> A;
  Mat<Scalar> y;  // m x k; one column for a single measurement vector
  double eta = 0.0;

  void validate() const;
};

template <class Scalar>
struct RecoveryResult {
  Mat<Scalar> x_hat;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// Weighted block norm of x_hat.
  double objective = 0.0;
  /// ||A x_hat - y||_F.
  double constraint_residual = 0.0;
  /// Numerical rank of A found by the pre-reduction.
  std::size_t rank = 0;
  double final_rho = 0.0;
  std::vector<double> merit_history;
};

/// Proximal map of tau * ||.||_2: v * max(1 - tau / ||v||, 0).
template <class Scalar>
Vec<Scalar> block_soft_threshold(const Vec<Scalar>& v, double tau);

/// sum_b w_b ||X_{V_b}||_F, blocks indexing rows of X.
template <class Scalar>
double weighted_block_norm(const BlockPartition& partition, const WeightVector& w, const Mat<Scalar>& x);

/// Single measurement vector: sys.y must have one column; partition covers the
/// n columns of A.
template <class Scalar>
RecoveryResult<Scalar> solve_weighted(const BlockPartition& partition, const WeightVector& w,
                                      const MeasurementSystem<Scalar>& sys, const SolverConfig& cfg = {});

/// Joint-sparse recovery of a q x k matrix with row blocks from Y = A X + E.
template <class Scalar>
RecoveryResult<Scalar> solve_mmv(const BlockPartition& rows, const WeightVector& w, const Mat<Scalar>& A,
                                 const Mat<Scalar>& Y, double eta, const SolverConfig& cfg = {});

/// ||x_hat - x_true||_F / ||x_true||_F; throws if x_true is zero.
template <class Scalar>
double relative_error(const Mat<Scalar>& x_hat, const Mat<Scalar>& x_true);

template <class Scalar>
bool success(const Mat<Scalar>& x_hat, const Mat<Scalar>& x_true, double threshold = 1e-3);

inline constexpr double kDefaultSuccessThreshold = 1e-3;

extern template struct MeasurementSystem<double>;
extern template struct MeasurementSystem<std::complex<double>>;

} // namespace bspw
