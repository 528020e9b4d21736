#pragma once

#include <cmath>
#include <stdexcept>

namespace revsmc {

// Modified Bessel function of the second kind, order 1, by the ascending
// series. Converges to machine precision for x <= 2; that covers the single
// use here (the hyperbolic normalising constant K1(1)).
inline double bessel_k1(double x) {
  if (!(x > 0.0) || x > 2.0)
    throw std::domain_error("bessel_k1: series implementation requires 0 < x <= 2");
  constexpr double euler_gamma = 0.57721566490153286060651209008240243;
  const double q = 0.25 * x * x;  // (x/2)^2
  double term_i1 = 0.5 * x;       // (x/2)^(2k+1) / (k! (k+1)!)
  double i1 = 0.0;
  double term_s = 1.0;            // q^k / (k! (k+1)!)
  double s = 0.0;
  double psi_a = -euler_gamma;    // psi(k+1)
  double psi_b = 1.0 - euler_gamma;  // psi(k+2)
  for (int k = 0; k < 64; ++k) {
    i1 += term_i1;
    const double add = (psi_a + psi_b) * term_s;
    s += add;
    if (std::abs(term_i1) < 1e-300 && std::abs(add) < 1e-20 * std::abs(s)) break;
    term_i1 *= q / ((k + 1.0) * (k + 2.0));
    term_s *= q / ((k + 1.0) * (k + 2.0));
    psi_a += 1.0 / (k + 1.0);
    psi_b += 1.0 / (k + 2.0);
  }
  return std::log(0.5 * x) * i1 + 1.0 / x - 0.25 * x * s;
}

inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double binomial_pmf(int n, int k, double p) {
  if (k < 0 || k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  return std::exp(log_binomial(n, k) + k * std::log(p) + (n - k) * std::log1p(-p));
}

}  // namespace revsmc
