#pragma once

// Gaussian tail-moment integrals behind the optimal-weight equations and the
// statistical-dimension bound.
//
//   J_k(z)    = int_z^inf u^k exp(-u^2/2) du
//   psi(z,k)  = int_z^inf (u - z)   u^(k-1) exp(-u^2/2) du = J_k - z J_{k-1}
//   phiB(z,k) = int_z^inf (u - z)^2 u^(k-1) exp(-u^2/2) du = J_{k+1} - 2z J_k + z^2 J_{k-1}
//
// Everything is evaluated through the upper incomplete gamma function,
// J_k(z) = 2^((k-1)/2) Gamma((k+1)/2, z^2/2). The "normalized" variants divide
// by chi_normalizer(k) = 2^(k/2-1) Gamma(k/2), the constant that turns
// u^(k-1) exp(-u^2/2) into the chi density with k degrees of freedom; they are
// computed in log space and stay finite for large k.

namespace bspw::specfun {

/// Regularized upper incomplete gamma Q(a, z) = Gamma(a, z) / Gamma(a).
double regularized_upper_gamma(double a, double z);

/// Gamma(a, z) = int_z^inf u^(a-1) e^(-u) du. Requires a > 0, z >= 0.
double upper_incomplete_gamma(double a, double z);

/// 2^(k/2-1) Gamma(k/2).
double chi_normalizer(int k);
double log_chi_normalizer(int k);

/// J_k(z); k >= 0, z >= 0.
double tail_moment(int k, double z);

/// J_j(z) / chi_normalizer(k) for j in {k-1, k, k+1}.
double tail_moment_normalized(int j, double z, int k);

double psi(double z, int k);
double phi_b(double z, int k);

/// psi(z,k) / chi_normalizer(k); equals the chi_k mean at z = 0.
double psi_normalized(double z, int k);
/// phiB(z,k) / chi_normalizer(k); equals k at z = 0.
double phi_b_normalized(double z, int k);

} // namespace bspw::specfun
