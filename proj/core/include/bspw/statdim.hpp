#pragma once

// Statistical-dimension upper bounds for the descent cone of the weighted
// l1,2 norm, and a Monte-Carlo estimate of the exact statistical dimension.
//
// For block support B and weights w the bound is
//
//   inf_{t>=0}  sum_{b in B} (k_b + t^2 w_b^2) + sum_{b not in B} phiB(t w_b, k_b) / N_{k_b}
//
// with N_k = 2^(k/2-1) Gamma(k/2). The objective is strictly convex in t
// whenever some block lies off the support, so the minimizer is found by
// bisecting on its derivative.
//
// Complex blocks of length k enter every formula here as real blocks of size
// 2k; use BlockPartition::real_embedding() before calling.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bspw/model.hpp"

namespace bspw {

struct StatDimResult {
  double bound = 0.0;
  /// Minimizer; +inf when the infimum is only approached as t -> inf.
  double t_star = 0.0;
  bool attained = true;
  /// Contribution of each block at t_star (0 for off-support blocks when not attained).
  std::vector<double> per_block_terms;
};

/// Objective of the support-conditioned bound at a given t.
double statdim_objective(const BlockPartition& partition, std::span<const std::size_t> support,
                         const WeightVector& w, double t);

/// Statistical-dimension bound for a fixed block support.
StatDimResult statdim_bound(const BlockPartition& partition, std::span<const std::size_t> support,
                            const WeightVector& w);

/// Objective of the expected bound under a Model 1 prior at a given t.
double expected_objective_model1(const BlockPartition& partition, const PriorModel1& prior,
                                 const WeightVector& w, double t);

/// inf_t sum_b [ p_b (k_b + t^2 w_b^2) + (1 - p_b) phiB(t w_b, k_b) / N_{k_b} ].
StatDimResult expected_bound_model1(const BlockPartition& partition, const PriorModel1& prior,
                                    const WeightVector& w);

/// sum_i k alpha_i |P_i| + inf_t sum_i |P_i| [ t^2 lambda_i^2 alpha_i + (1 - alpha_i) phiB(t lambda_i, k) / N_k ]
/// for a partition with common block size k. per_block_terms holds the
/// per-set terms (length L).
StatDimResult expected_bound_model2(const BlockPartition& partition, const PriorModel2& prior,
                                    const LambdaVector& lambda);

struct EmpiricalStatDim {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte-Carlo estimate of E dist^2(g, cone(subdifferential)) for a vector with
/// block support B whose on-support blocks point along `x` (only the blocks in
/// B are read; each must be nonzero and is normalized internally). The
/// per-sample distance is minimized over t exactly. Reproducible given seed,
/// independent of the worker count.
EmpiricalStatDim empirical_statdim(const BlockPartition& partition, std::span<const std::size_t> support,
                                   const WeightVector& w, const Eigen::VectorXd& x,
                                   std::size_t n_samples, std::uint64_t seed);

/// Squared distance from g to the cone generated by the weighted l1,2
/// subdifferential at a point with support B and unit block directions xhat.
double polar_cone_distance_sq(const BlockPartition& partition, std::span<const std::size_t> support,
                              const WeightVector& w, const Eigen::VectorXd& xhat,
                              const Eigen::VectorXd& g, double* t_star = nullptr);

} // namespace bspw
