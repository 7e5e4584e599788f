#pragma once

// Reference implementations used only by tests. They deliberately avoid the
// library's own special functions: integrals go through adaptive
// Gauss-Kronrod quadrature and incomplete gammas through Boost.Math.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

inline double integrate(const std::function<double(double)>& f, double a, double b) {
  // Split the range so that each panel sees a smooth, moderately varying integrand.
  constexpr int kPanels = 16;
  double sum = 0.0;
  const double h = (b - a) / kPanels;
  for (int i = 0; i < kPanels; ++i) {
    sum += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a + i * h, a + (i + 1) * h, 12, 1e-15);
  }
  return sum;
}

/// Upper limit where u^k exp(-u^2/2) is negligible relative to its peak.
inline double upper_limit(double z, int k) { return std::max(z, std::sqrt(static_cast<double>(k))) + 40.0; }

/// J_k(z) = int_z^inf u^k exp(-u^2/2) du by quadrature.
inline double tail_moment(int k, double z) {
  return integrate([k](double u) { return std::pow(u, k) * std::exp(-0.5 * u * u); }, z, upper_limit(z, k));
}

inline double psi(double z, int k) {
  return integrate([=](double u) { return (u - z) * std::pow(u, k - 1) * std::exp(-0.5 * u * u); }, z,
                   upper_limit(z, k));
}

inline double phi_b(double z, int k) {
  return integrate([=](double u) { return (u - z) * (u - z) * std::pow(u, k - 1) * std::exp(-0.5 * u * u); }, z,
                   upper_limit(z, k));
}

/// int_z^inf u^(a-1) e^-u du by quadrature.
inline double upper_gamma(double a, double z) {
  const double hi = std::max(z, a) + 60.0 + 10.0 * std::sqrt(a);
  // u = z + s^2 removes the integrable endpoint singularity when a < 1.
  return integrate([a, z](double s) { return 2.0 * s * std::pow(z + s * s, a - 1) * std::exp(-(z + s * s)); }, 0.0,
                   std::sqrt(hi - z));
}

/// 2^(k/2-1) Gamma(k/2).
inline double normalizer(int k) { return std::pow(2.0, 0.5 * k - 1.0) * std::tgamma(0.5 * k); }

/// Boost-backed closed form of J_k(z).
inline double tail_moment_boost(int k, double z) {
  const double a = 0.5 * (k + 1);
  return std::pow(2.0, 0.5 * (k - 1)) * boost::math::tgamma(a) * boost::math::gamma_q(a, 0.5 * z * z);
}

/// phiB(z, k) from Boost-backed tail moments.
inline double phi_b_boost(double z, int k) {
  return tail_moment_boost(k + 1, z) - 2.0 * z * tail_moment_boost(k, z) + z * z * tail_moment_boost(k - 1, z);
}

/// Weight-equation residual assembled from Boost incomplete gammas.
inline double weight_residual_boost(double p, int k, double w) {
  const double psi_v = tail_moment_boost(k, w) - w * tail_moment_boost(k - 1, w);
  return p / (1.0 - p) * w - psi_v / normalizer(k);
}

/// k = 1 residual: p/(1-p) w - (sqrt(2/pi) e^{-w^2/2} - w erfc(w/sqrt2)).
inline double weight_residual_k1(double p, double w) {
  const double pi = 3.14159265358979323846;
  return p / (1.0 - p) * w - (std::sqrt(2.0 / pi) * std::exp(-0.5 * w * w) - w * std::erfc(w / std::sqrt(2.0)));
}

inline double bisect(const std::function<double(double)>& g, double lo, double hi) {
  double glo = g(lo);
  if (glo * g(hi) > 0.0) throw std::runtime_error("oracle bisection: no sign change");
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Scans g on [lo, hi] with the given step and returns the first sign change,
/// refined by bisection inside the bracketing cell. Also reports how many sign
/// changes the scan saw.
struct ScanResult {
  double root = std::numeric_limits<double>::quiet_NaN();
  int sign_changes = 0;
};

inline ScanResult scan_root(const std::function<double(double)>& g, double lo, double hi, double step) {
  ScanResult r;
  double prev_x = lo;
  double prev = g(lo);
  const auto steps = static_cast<long>(std::ceil((hi - lo) / step));
  for (long i = 1; i <= steps; ++i) {
    const double x = std::min(hi, lo + static_cast<double>(i) * step);
    const double v = g(x);
    if ((v > 0.0) != (prev > 0.0)) {
      if (r.sign_changes == 0) r.root = bisect(g, prev_x, x);
      ++r.sign_changes;
    }
    prev = v;
    prev_x = x;
  }
  return r;
}

/// Minimum of f over a uniform grid on [lo, hi].
inline std::pair<double, double> grid_min(const std::function<double(double)>& f, double lo, double hi, double step) {
  double best_x = lo;
  double best = f(lo);
  const auto steps = static_cast<long>(std::ceil((hi - lo) / step));
  for (long i = 1; i <= steps; ++i) {
    const double x = std::min(hi, lo + static_cast<double>(i) * step);
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return {best_x, best};
}

} // namespace oracle
