#pragma once

#include <cmath>
#include <vector>

#include "revsmc/green.hpp"
#include "revsmc/rng.hpp"

namespace revsmc::testchain {

// Product chain on (z, y): z moves by a kernel with an absorbing target
// class, and y is redrawn from pi(. | z') at every step, so the conditional
// law of y given z is time-independent by construction.
struct ProductChain {
  int nz, ny;
  DenseMatrix kernel;      // z-kernel
  std::vector<double> pi;  // pi[z * ny + y]
  std::vector<double> rho; // entrance law over z (zero on the target)

  int index(int z, int y) const { return z * ny + y; }

  DenseMatrix transition() const {
    DenseMatrix t(nz * ny, nz * ny);
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        for (int z2 = 0; z2 < nz; ++z2)
          for (int y2 = 0; y2 < ny; ++y2)
            t.at(index(z, y), index(z2, y2)) = kernel.at(z, z2) * pi[z2 * ny + y2];
    return t;
  }
};

inline ProductChain random_product_chain(SplitMix64& rng) {
  ProductChain c;
  c.nz = 2 + static_cast<int>(rng.uniform_int(4));
  c.ny = 2 + static_cast<int>(rng.uniform_int(3));
  const int target_z = c.nz - 1;
  c.kernel = DenseMatrix(c.nz, c.nz);
  for (int z = 0; z < c.nz; ++z) {
    if (z == target_z) continue;  // absorbing row stays zero
    double total = 0.0;
    std::vector<double> row(c.nz);
    for (int z2 = 0; z2 < c.nz; ++z2) {
      row[z2] = rng.uniform(0.05, 1.0);
      total += row[z2];
    }
    for (int z2 = 0; z2 < c.nz; ++z2)
      c.kernel.at(z, z2) = 0.7 * row[z2] / total + (z2 == target_z ? 0.3 : 0.0);
  }
  c.pi.resize(c.nz * c.ny);
  for (int z = 0; z < c.nz; ++z) {
    double total = 0.0;
    for (int y = 0; y < c.ny; ++y) {
      c.pi[z * c.ny + y] = rng.uniform(0.05, 1.0);
      total += c.pi[z * c.ny + y];
    }
    for (int y = 0; y < c.ny; ++y) c.pi[z * c.ny + y] /= total;
  }
  c.rho.assign(c.nz, 0.0);
  double total = 0.0;
  for (int z = 0; z < c.nz - 1; ++z) {
    c.rho[z] = rng.uniform(0.1, 1.0);
    total += c.rho[z];
  }
  for (double& v : c.rho) v /= total;
  return c;
}

// Largest relative deviation of G(mu,(z,y)) / G(mu,(z,y')) from the CSD
// ratio pi(y|z) / pi(y'|z) over all non-target z and all y pairs.
inline double max_csd_ratio_error(const ProductChain& c) {
  const int n = c.nz * c.ny;
  std::vector<double> mu(n, 0.0);
  std::vector<bool> target(n, false);
  for (int z = 0; z < c.nz; ++z)
    for (int y = 0; y < c.ny; ++y) {
      mu[c.index(z, y)] = c.rho[z] * c.pi[z * c.ny + y];
      target[c.index(z, y)] = (z == c.nz - 1);
    }
  const auto g = green_function_oracle(c.transition(), mu, target);
  double worst = 0.0;
  for (int z = 0; z < c.nz - 1; ++z)
    for (int y = 0; y < c.ny; ++y)
      for (int y2 = 0; y2 < c.ny; ++y2) {
        const double lhs = g[c.index(z, y)] / g[c.index(z, y2)];
        const double rhs = c.pi[z * c.ny + y] / c.pi[z * c.ny + y2];
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
      }
  return worst;
}

}  // namespace revsmc::testchain
