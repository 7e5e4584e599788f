#include "bspw/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bspw::specfun {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxTerms = 100000;

// Lower regularized P(a, z) by the power series; converges fast for z < a + 1.
double series_p(double a, double z) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxTerms; ++n) {
    term *= z / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-z + a * std::log(z) - std::lgamma(a));
}

// Upper regularized Q(a, z) by the Legendre continued fraction (modified Lentz).
double continued_fraction_q(double a, double z) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = z + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-z + a * std::log(z) - std::lgamma(a)) * h;
}

void check_order(int k, int min_k, const char* fn) {
  if (k < min_k) {
    throw std::invalid_argument(std::string(fn) + ": order must be >= " + std::to_string(min_k) +
                                ", got " + std::to_string(k));
  }
}

void check_threshold(double z, const char* fn) {
  if (!(z >= 0.0)) {
    throw std::invalid_argument(std::string(fn) + ": threshold must be >= 0, got " + std::to_string(z));
  }
}

// log J_j(0) = (j-1)/2 log 2 + lgamma((j+1)/2)
double log_tail_moment_at_zero(int j) {
  return 0.5 * (j - 1) * std::numbers::ln2 + std::lgamma(0.5 * (j + 1));
}

} // namespace

double regularized_upper_gamma(double a, double z) {
  if (!(a > 0.0)) throw std::invalid_argument("incomplete gamma: a must be > 0, got " + std::to_string(a));
  check_threshold(z, "incomplete gamma");
  if (z == 0.0) return 1.0;
  if (std::isinf(z)) return 0.0;
  if (z < a + 1.0) return 1.0 - series_p(a, z);
  return continued_fraction_q(a, z);
}

double upper_incomplete_gamma(double a, double z) {
  return regularized_upper_gamma(a, z) * std::tgamma(a);
}

double log_chi_normalizer(int k) {
  check_order(k, 1, "chi_normalizer");
  return (0.5 * k - 1.0) * std::numbers::ln2 + std::lgamma(0.5 * k);
}

double chi_normalizer(int k) { return std::exp(log_chi_normalizer(k)); }

double tail_moment(int k, double z) {
  check_order(k, 0, "tail_moment");
  check_threshold(z, "tail_moment");
  return std::exp(log_tail_moment_at_zero(k)) * regularized_upper_gamma(0.5 * (k + 1), 0.5 * z * z);
}

double tail_moment_normalized(int j, double z, int k) {
  check_order(j, 0, "tail_moment_normalized");
  check_threshold(z, "tail_moment_normalized");
  const double scale = std::exp(log_tail_moment_at_zero(j) - log_chi_normalizer(k));
  return scale * regularized_upper_gamma(0.5 * (j + 1), 0.5 * z * z);
}

double psi(double z, int k) {
  check_order(k, 1, "psi");
  return psi_normalized(z, k) * chi_normalizer(k);
}

double phi_b(double z, int k) {
  check_order(k, 1, "phi_b");
  return phi_b_normalized(z, k) * chi_normalizer(k);
}

double psi_normalized(double z, int k) {
  check_order(k, 1, "psi");
  check_threshold(z, "psi");
  const double v = tail_moment_normalized(k, z, k) - z * tail_moment_normalized(k - 1, z, k);
  return v > 0.0 ? v : 0.0;
}

double phi_b_normalized(double z, int k) {
  check_order(k, 1, "phi_b");
  check_threshold(z, "phi_b");
  const double v = tail_moment_normalized(k + 1, z, k) - 2.0 * z * tail_moment_normalized(k, z, k) +
                   z * z * tail_moment_normalized(k - 1, z, k);
  return v > 0.0 ? v : 0.0;
}

} // namespace bspw::specfun
