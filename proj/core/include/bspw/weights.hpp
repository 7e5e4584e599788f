#pragma once

// Optimal weights for the weighted l1,2 program under a block-support prior.
//
// For a block of size k that is active with probability p, the optimal weight
// is the unique root w* >= 0 of
//
//     p / (1 - p) * w  =  psi(w, k) / (2^(k/2-1) Gamma(k/2)).
//
// The left side increases from 0 and the right side decreases from the chi_k
// mean towards 0, so the root exists and is unique for every p in (0, 1).
// Model 2 uses the same equation with the set accuracy alpha_i in place of p.

#include <cstddef>
#include <span>
#include <stdexcept>

#include "bspw/model.hpp"

namespace bspw {

struct WeightSolverConfig {
  double root_tol = 1e-12;          // absolute bracket width on w
  int max_bracket_doublings = 60;
  int max_iters = 200;
  /// alpha = 0 weights are capped at lambda_cap_factor * max(finite lambda*).
  double lambda_cap_factor = 10.0;
  /// alpha = 1 weights (root 0) are replaced by this floor.
  double lambda_min = 1e-8;

  void validate() const;
};

/// Raised when the bracketing root finder cannot isolate or converge on a root.
class RootFindingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// g(w) = p/(1-p) w - psi(w,k)/N_k. Negative left of the optimal weight.
double weight_equation_residual(double p, int k, double w);

/// Root of the optimal-weight equation for one block.
double solve_weight_scalar(double p, int k, const WeightSolverConfig& cfg = {});

/// Independent per-block solves, parallel over blocks for large q.
WeightVector solve_model1(const PriorModel1& prior, const BlockPartition& partition,
                          const WeightSolverConfig& cfg = {});

/// Per-set weights lambda* for equal block size k. alpha = 0 sets get the cap,
/// alpha = 1 sets get cfg.lambda_min.
LambdaVector solve_model2(const PriorModel2& prior, int k, const WeightSolverConfig& cfg = {});

/// w_b = 1 / (p_b + eps).
WeightVector heuristic_weights(const PriorModel1& prior, double eps);
/// lambda_i = 1 / (alpha_i + eps).
LambdaVector heuristic_lambdas(const PriorModel2& prior, double eps);

/// Sensitivity constant c(k, p) bounding |w*(p) - w*(p')| <= c |p - p'|:
///
///   c = (sqrt2 h (G - g) + 2 g)^2 / (2 sqrt2 G g),
///   h = w*(p), G = Gamma(k/2), g = Gamma(k/2, h^2/2) (upper incomplete).
///
/// Throws std::overflow_error when the value is not finite (p too close to 0).
double robustness_constant(int k, double p, const WeightSolverConfig& cfg = {});

} // namespace bspw
