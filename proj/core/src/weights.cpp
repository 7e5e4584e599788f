#include "bspw/weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "bspw/parallel.hpp"
#include "bspw/specfun.hpp"

namespace bspw {

namespace {

constexpr std::size_t kParallelBlockThreshold = 256;

void check_probability(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie strictly inside (0, 1), got " +
                                std::to_string(p));
  }
}

void check_order(int k) {
  if (k < 1) throw std::invalid_argument("block size must be >= 1, got " + std::to_string(k));
}

} // namespace

void WeightSolverConfig::validate() const {
  if (!(root_tol > 0.0)) throw std::invalid_argument("weight solver: root_tol must be > 0");
  if (max_bracket_doublings < 1 || max_iters < 1) {
    throw std::invalid_argument("weight solver: iteration limits must be >= 1");
  }
  if (!(lambda_cap_factor >= 1.0)) throw std::invalid_argument("weight solver: lambda_cap_factor must be >= 1");
  if (!(lambda_min > 0.0)) throw std::invalid_argument("weight solver: lambda_min must be > 0");
}

double weight_equation_residual(double p, int k, double w) {
  return p / (1.0 - p) * w - specfun::psi_normalized(w, k);
}

double solve_weight_scalar(double p, int k, const WeightSolverConfig& cfg) {
  check_probability(p, "probability");
  check_order(k);
  cfg.validate();

  auto g = [p, k](double w) { return weight_equation_residual(p, k, w); };

  const double g0 = g(0.0);  // -chi_k mean < 0
  // The root never exceeds the chi_k mean divided by the slope, but start from
  // the mean itself and double: the residual grows at least linearly.
  double hi = std::max(-g0, 1e-3);
  double g_hi = g(hi);
  int doublings = 0;
  while (g_hi <= 0.0) {
    if (++doublings > cfg.max_bracket_doublings) {
      throw RootFindingError("weight solver: no sign change in [0, " + std::to_string(hi) +
                             "] for p=" + std::to_string(p) + ", k=" + std::to_string(k) +
                             " (g(0)=" + std::to_string(g0) + ", g(hi)=" + std::to_string(g_hi) + ")");
    }
    hi *= 2.0;
    g_hi = g(hi);
  }

  const double tol = cfg.root_tol;
  auto done = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  std::uintmax_t iters = static_cast<std::uintmax_t>(cfg.max_iters);
  auto [a, b] = boost::math::tools::toms748_solve(g, 0.0, hi, g0, g_hi, done, iters);
  if (iters >= static_cast<std::uintmax_t>(cfg.max_iters) && !done(a, b)) {
    throw RootFindingError("weight solver: bracket [" + std::to_string(a) + ", " +
                           std::to_string(b) + "] did not shrink below root_tol in " +
                           std::to_string(cfg.max_iters) + " iterations");
  }
  return std::abs(g(a)) <= std::abs(g(b)) ? a : b;
}

WeightVector solve_model1(const PriorModel1& prior, const BlockPartition& partition,
                          const WeightSolverConfig& cfg) {
  if (prior.size() != partition.num_blocks()) {
    throw std::invalid_argument("solve_model1: prior has " + std::to_string(prior.size()) +
                                " entries, partition has " +
                                std::to_string(partition.num_blocks()) + " blocks");
  }
  std::vector<double> w(prior.size());
  auto body = [&](std::size_t b) {
    w[b] = solve_weight_scalar(prior[b], static_cast<int>(partition.block_size(b)), cfg);
  };
  if (w.size() >= kParallelBlockThreshold) {
    parallel_for(w.size(), body);
  } else {
    for (std::size_t b = 0; b < w.size(); ++b) body(b);
  }
  return WeightVector(std::move(w));
}

LambdaVector solve_model2(const PriorModel2& prior, int k, const WeightSolverConfig& cfg) {
  check_order(k);
  cfg.validate();
  const std::size_t L = prior.num_sets();
  std::vector<double> lambda(L, std::numeric_limits<double>::quiet_NaN());
  double largest = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    const double alpha = prior.alpha(i);
    if (alpha <= 0.0) continue;
    if (alpha >= 1.0) {
      lambda[i] = cfg.lambda_min;
    } else {
      lambda[i] = std::max(solve_weight_scalar(alpha, k, cfg), cfg.lambda_min);
    }
    largest = std::max(largest, lambda[i]);
  }
  // Every set has alpha = 0: cap relative to the smallest admissible probability.
  if (largest == 0.0) largest = solve_weight_scalar(PriorModel1::kDefaultClamp, k, cfg);
  for (auto& v : lambda) {
    if (std::isnan(v)) v = cfg.lambda_cap_factor * largest;
  }
  return LambdaVector(std::move(lambda));
}

WeightVector heuristic_weights(const PriorModel1& prior, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("heuristic weights: eps must be > 0");
  std::vector<double> w(prior.size());
  for (std::size_t b = 0; b < w.size(); ++b) w[b] = 1.0 / (prior[b] + eps);
  return WeightVector(std::move(w));
}

LambdaVector heuristic_lambdas(const PriorModel2& prior, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("heuristic weights: eps must be > 0");
  std::vector<double> lambda(prior.num_sets());
  for (std::size_t i = 0; i < lambda.size(); ++i) lambda[i] = 1.0 / (prior.alpha(i) + eps);
  return LambdaVector(std::move(lambda));
}

double robustness_constant(int k, double p, const WeightSolverConfig& cfg) {
  const double h = solve_weight_scalar(p, k, cfg);
  const double a = 0.5 * k;
  const double G = std::tgamma(a);
  const double g = specfun::upper_incomplete_gamma(a, 0.5 * h * h);
  const double num = std::numbers::sqrt2 * h * (G - g) + 2.0 * g;
  const double c = num * num / (2.0 * std::numbers::sqrt2 * G * g);
  if (!std::isfinite(c)) {
    throw std::overflow_error("robustness constant overflows at k=" + std::to_string(k) +
                              ", p=" + std::to_string(p));
  }
  return c;
}

} // namespace bspw
