#pragma once

#include <cmath>
#include <stdexcept>

namespace revsmc {

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (QUADPACK values).
inline constexpr double gk_nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double k15_weights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double g7_weights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename F>
inline void gk15(const F& f, double a, double b, double& value, double& error) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[8];
  double resk = 0.0, resg = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double dx = h * gk_nodes[i];
    const double fsum = (i == 7) ? f(c) : f(c - dx) + f(c + dx);
    fv[i] = fsum;
    resk += k15_weights[i] * fsum;
  }
  // Gauss nodes are the odd-index Kronrod nodes plus the midpoint
  resg = g7_weights[0] * fv[1] + g7_weights[1] * fv[3] + g7_weights[2] * fv[5] +
         g7_weights[3] * fv[7];
  value = resk * h;
  error = std::abs((resk - resg) * h);
}

template <typename F>
inline double adaptive(const F& f, double a, double b, double tol, int depth, int& evals) {
  double v, e;
  gk15(f, a, b, v, e);
  evals += 15;
  if (e <= tol || b - a < 1e-14 * (1.0 + std::abs(a))) {
    if (depth <= 0 && e > tol)
      throw QuadratureError("adaptive quadrature failed to converge");
    if (e <= tol) return v;
  }
  if (depth <= 0) throw QuadratureError("adaptive quadrature failed to converge");
  const double c = 0.5 * (a + b);
  return adaptive(f, a, c, 0.5 * tol, depth - 1, evals) +
         adaptive(f, c, b, 0.5 * tol, depth - 1, evals);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration to absolute tolerance abs_tol.
template <typename F>
inline double integrate(const F& f, double a, double b, double abs_tol = 1e-9) {
  if (!(b > a)) return 0.0;
  int evals = 0;
  return detail::adaptive(f, a, b, abs_tol, 48, evals);
}

}  // namespace revsmc
