#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace revsmc {

struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-major dense matrix, just large enough for the small linear systems the
// test oracles solve.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

// Gaussian elimination with partial pivoting; throws on a (near-)singular
// system.
inline std::vector<double> solve_linear(DenseMatrix m, std::vector<double> rhs) {
  const int n = m.rows;
  if (m.cols != n || static_cast<int>(rhs.size()) != n)
    throw std::invalid_argument("solve_linear: dimension mismatch");
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(m.at(col, col));
    for (int r = col + 1; r < n; ++r) {
      const double v = std::abs(m.at(r, col));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best < 1e-13)
      throw SingularSystemError("solve_linear: singular or near-singular system");
    if (piv != col) {
      for (int c = col; c < n; ++c) std::swap(m.at(piv, c), m.at(col, c));
      std::swap(rhs[piv], rhs[col]);
    }
    const double d = m.at(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double factor = m.at(r, col) / d;
      if (factor == 0.0) continue;
      for (int c = col; c < n; ++c) m.at(r, c) -= factor * m.at(col, c);
      rhs[r] -= factor * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = rhs[r];
    for (int c = r + 1; c < n; ++c) s -= m.at(r, c) * x[c];
    x[r] = s / m.at(r, r);
  }
  return x;
}

}  // namespace revsmc
