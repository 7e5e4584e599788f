#include "bspw/statdim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "bspw/parallel.hpp"
#include "bspw/rng.hpp"
#include "bspw/specfun.hpp"

namespace bspw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxDoublings = 200;
constexpr std::size_t kChunk = 512;

std::vector<char> support_mask(std::size_t q, std::span<const std::size_t> support) {
  std::vector<char> mask(q, 0);
  for (auto b : support) {
    if (b >= q) throw std::invalid_argument("support: block index " + std::to_string(b) + " out of range");
    mask[b] = 1;
  }
  return mask;
}

void check_weights(const BlockPartition& partition, const WeightVector& w) {
  if (w.size() != partition.num_blocks()) {
    throw std::invalid_argument("weights have " + std::to_string(w.size()) + " entries, partition has " +
                                std::to_string(partition.num_blocks()) + " blocks");
  }
}

struct Minimum {
  double t = 0.0;
  bool attained = true;
};

// Minimizer over t >= 0 of a convex function given its derivative. The
// function is coercive exactly when `coercive` is true; otherwise the
// derivative stays negative and the infimum sits at t -> inf.
Minimum minimize_convex(const std::function<double(double)>& derivative, bool coercive) {
  if (!coercive) return {kInf, false};
  const double d0 = derivative(0.0);
  if (d0 >= 0.0) return {0.0, true};
  double lo = 0.0;
  double hi = 1.0;
  double d_lo = d0;
  double d_hi = derivative(hi);
  for (int i = 0; d_hi < 0.0; ++i) {
    if (i == kMaxDoublings) throw std::runtime_error("statdim: failed to bracket the minimizer");
    lo = hi;
    d_lo = d_hi;
    hi *= 2.0;
    d_hi = derivative(hi);
  }
  if (d_hi == 0.0) return {hi, true};
  std::uintmax_t iters = 300;
  auto [a, b] = boost::math::tools::toms748_solve(derivative, lo, hi, d_lo, d_hi,
                                                  boost::math::tools::eps_tolerance<double>(50), iters);
  return {0.5 * (a + b), true};
}

} // namespace

double statdim_objective(const BlockPartition& partition, std::span<const std::size_t> support,
                         const WeightVector& w, double t) {
  check_weights(partition, w);
  const auto mask = support_mask(partition.num_blocks(), support);
  double total = 0.0;
  for (std::size_t b = 0; b < mask.size(); ++b) {
    const int k = static_cast<int>(partition.block_size(b));
    const double tw = t * w[b];
    total += mask[b] ? k + tw * tw : specfun::phi_b_normalized(tw, k);
  }
  return total;
}

StatDimResult statdim_bound(const BlockPartition& partition, std::span<const std::size_t> support,
                            const WeightVector& w) {
  check_weights(partition, w);
  const std::size_t q = partition.num_blocks();
  const auto mask = support_mask(q, support);
  const bool any_on = std::any_of(mask.begin(), mask.end(), [](char c) { return c != 0; });

  auto derivative = [&](double t) {
    double d = 0.0;
    for (std::size_t b = 0; b < q; ++b) {
      const double wb = w[b];
      if (mask[b]) {
        d += 2.0 * t * wb * wb;
      } else {
        d -= 2.0 * wb * specfun::psi_normalized(t * wb, static_cast<int>(partition.block_size(b)));
      }
    }
    return d;
  };
  const auto min = minimize_convex(derivative, any_on);

  StatDimResult out;
  out.t_star = min.t;
  out.attained = min.attained;
  out.per_block_terms.resize(q, 0.0);
  if (!min.attained) return out;  // empty support: every tail term vanishes as t -> inf
  for (std::size_t b = 0; b < q; ++b) {
    const int k = static_cast<int>(partition.block_size(b));
    const double tw = min.t * w[b];
    out.per_block_terms[b] = mask[b] ? k + tw * tw : specfun::phi_b_normalized(tw, k);
  }
  for (double v : out.per_block_terms) out.bound += v;
  out.bound = std::clamp(out.bound, 0.0, static_cast<double>(partition.dim()));
  return out;
}

double expected_objective_model1(const BlockPartition& partition, const PriorModel1& prior,
                                 const WeightVector& w, double t) {
  check_weights(partition, w);
  if (prior.size() != partition.num_blocks()) throw std::invalid_argument("prior/partition size mismatch");
  double total = 0.0;
  for (std::size_t b = 0; b < w.size(); ++b) {
    const int k = static_cast<int>(partition.block_size(b));
    const double tw = t * w[b];
    total += prior[b] * (k + tw * tw) + (1.0 - prior[b]) * specfun::phi_b_normalized(tw, k);
  }
  return total;
}

StatDimResult expected_bound_model1(const BlockPartition& partition, const PriorModel1& prior,
                                    const WeightVector& w) {
  check_weights(partition, w);
  if (prior.size() != partition.num_blocks()) {
    throw std::invalid_argument("expected_bound_model1: prior has " + std::to_string(prior.size()) +
                                " entries, partition has " + std::to_string(partition.num_blocks()) +
                                " blocks");
  }
  const std::size_t q = w.size();
  auto derivative = [&](double t) {
    double d = 0.0;
    for (std::size_t b = 0; b < q; ++b) {
      const double wb = w[b];
      d += 2.0 * prior[b] * t * wb * wb -
           2.0 * (1.0 - prior[b]) * wb *
               specfun::psi_normalized(t * wb, static_cast<int>(partition.block_size(b)));
    }
    return d;
  };
  const auto min = minimize_convex(derivative, true);

  StatDimResult out;
  out.t_star = min.t;
  out.per_block_terms.resize(q);
  for (std::size_t b = 0; b < q; ++b) {
    const int k = static_cast<int>(partition.block_size(b));
    const double tw = min.t * w[b];
    out.per_block_terms[b] = prior[b] * (k + tw * tw) + (1.0 - prior[b]) * specfun::phi_b_normalized(tw, k);
    out.bound += out.per_block_terms[b];
  }
  return out;
}

StatDimResult expected_bound_model2(const BlockPartition& partition, const PriorModel2& prior,
                                    const LambdaVector& lambda) {
  const auto common = partition.common_block_size();
  if (!common) throw std::invalid_argument("expected_bound_model2: blocks must share one size");
  if (prior.num_blocks() != partition.num_blocks()) {
    throw std::invalid_argument("expected_bound_model2: prior/partition block count mismatch");
  }
  if (lambda.size() != prior.num_sets()) {
    throw std::invalid_argument("expected_bound_model2: lambda/set count mismatch");
  }
  const int k = static_cast<int>(*common);
  const std::size_t L = prior.num_sets();
  std::vector<double> set_size(L);
  double constant = 0.0;
  bool coercive = false;
  for (std::size_t i = 0; i < L; ++i) {
    set_size[i] = static_cast<double>(prior.set(i).size());
    constant += k * prior.alpha(i) * set_size[i];
    coercive = coercive || prior.alpha(i) > 0.0;
  }
  auto term = [&](std::size_t i, double t) {
    const double tl = t * lambda[i];
    const double a = prior.alpha(i);
    return set_size[i] * (tl * tl * a + (1.0 - a) * specfun::phi_b_normalized(tl, k));
  };
  auto derivative = [&](double t) {
    double d = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      const double li = lambda[i];
      const double a = prior.alpha(i);
      d += set_size[i] * (2.0 * a * t * li * li - 2.0 * (1.0 - a) * li * specfun::psi_normalized(t * li, k));
    }
    return d;
  };
  const auto min = minimize_convex(derivative, coercive);

  StatDimResult out;
  out.t_star = min.t;
  out.attained = min.attained;
  out.per_block_terms.assign(L, 0.0);
  out.bound = constant;
  if (!min.attained) return out;
  for (std::size_t i = 0; i < L; ++i) {
    out.per_block_terms[i] = term(i, min.t);
    out.bound += out.per_block_terms[i];
  }
  return out;
}

double polar_cone_distance_sq(const BlockPartition& partition, std::span<const std::size_t> support,
                              const WeightVector& w, const Eigen::VectorXd& xhat,
                              const Eigen::VectorXd& g, double* t_star) {
  const std::size_t q = partition.num_blocks();
  const auto mask = support_mask(q, support);
  if (std::none_of(mask.begin(), mask.end(), [](char m) { return m != 0; })) {
    if (t_star) *t_star = kInf;  // distance -> 0 as t -> inf
    return 0.0;
  }

  // h(t) = sum_B ||g_b - t w_b xhat_b||^2 + sum_{not B} (||g_b|| - t w_b)_+^2 is
  // convex and piecewise quadratic; h'(t)/2 = t S2(t) - S1(t) where the
  // off-support blocks with ||g_b|| > t w_b contribute to both sums.
  double s1 = 0.0;
  double s2 = 0.0;
  struct Breakpoint {
    double tau;
    double w;
    double norm;
  };
  std::vector<Breakpoint> off;
  off.reserve(q);
  for (std::size_t b = 0; b < q; ++b) {
    const auto idx = partition.block(b);
    double dot = 0.0;
    double gg = 0.0;
    for (auto i : idx) {
      gg += g[i] * g[i];
      if (mask[b]) dot += g[i] * xhat[i];
    }
    if (mask[b]) {
      s1 += w[b] * dot;
      s2 += w[b] * w[b];
    } else {
      const double nrm = std::sqrt(gg);
      off.push_back({nrm / w[b], w[b], nrm});
      s1 += w[b] * nrm;
      s2 += w[b] * w[b];
    }
  }
  std::sort(off.begin(), off.end(), [](const auto& a, const auto& b) { return a.tau < b.tau; });

  double t = kInf;
  double lo = 0.0;
  for (std::size_t j = 0; j <= off.size(); ++j) {
    const double hi = j < off.size() ? off[j].tau : kInf;
    if (s2 > 0.0) {
      const double cand = std::max(s1 / s2, lo);
      if (cand <= hi) {
        t = cand;
        break;
      }
    }
    if (j < off.size()) {
      s1 -= off[j].w * off[j].norm;
      s2 -= off[j].w * off[j].w;
      lo = hi;
    }
  }
  if (t_star) *t_star = t;

  double total = 0.0;
  for (std::size_t b = 0; b < q; ++b) {
    const auto idx = partition.block(b);
    if (mask[b]) {
      for (auto i : idx) {
        const double r = g[i] - t * w[b] * xhat[i];
        total += r * r;
      }
    }
  }
  for (const auto& o : off) {
    const double r = o.norm - t * o.w;
    if (r > 0.0) total += r * r;
  }
  return total;
}

EmpiricalStatDim empirical_statdim(const BlockPartition& partition, std::span<const std::size_t> support,
                                   const WeightVector& w, const Eigen::VectorXd& x,
                                   std::size_t n_samples, std::uint64_t seed) {
  check_weights(partition, w);
  if (n_samples == 0) throw std::invalid_argument("empirical_statdim: n_samples must be >= 1");
  const std::size_t n = partition.dim();
  if (static_cast<std::size_t>(x.size()) != n) {
    throw std::invalid_argument("empirical_statdim: direction vector has wrong length");
  }
  Eigen::VectorXd xhat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (auto b : support) {
    if (b >= partition.num_blocks()) throw std::invalid_argument("support index out of range");
    double nrm = 0.0;
    for (auto i : partition.block(b)) nrm += x[i] * x[i];
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0)) {
      throw std::invalid_argument("empirical_statdim: block " + std::to_string(b) +
                                  " is in the support but has a zero direction");
    }
    for (auto i : partition.block(b)) xhat[i] = x[i] / nrm;
  }

  const std::size_t chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<double> sums(chunks, 0.0);
  std::vector<double> sq_sums(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    auto rng = make_rng(seed, {c});
    std::normal_distribution<double> normal;
    Eigen::VectorXd g(static_cast<Eigen::Index>(n));
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(n_samples, begin + kChunk);
    double s = 0.0, comp = 0.0, ss = 0.0, comp2 = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < g.size(); ++j) g[j] = normal(rng);
      const double d = polar_cone_distance_sq(partition, support, w, xhat, g);
      // Kahan-compensated running sums
      double y = d - comp;
      double t = s + y;
      comp = (t - s) - y;
      s = t;
      y = d * d - comp2;
      t = ss + y;
      comp2 = (t - ss) - y;
      ss = t;
    }
    sums[c] = s;
    sq_sums[c] = ss;
  });

  double total = 0.0, total_sq = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    total += sums[c];
    total_sq += sq_sums[c];
  }
  const double N = static_cast<double>(n_samples);
  EmpiricalStatDim out;
  out.samples = n_samples;
  out.mean = total / N;
  if (n_samples > 1) {
    const double var = std::max(0.0, (total_sq - N * out.mean * out.mean) / (N - 1.0));
    out.std_error = std::sqrt(var / N);
  }
  return out;
}

} // namespace bspw
