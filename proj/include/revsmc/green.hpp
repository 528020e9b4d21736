#pragma once

#include <vector>

#include "revsmc/linalg.hpp"

namespace revsmc {

// Green's function G(mu, x) = E_mu[ sum_{i=0}^{tau_T} 1_x(X_i) ] of a finite
// chain absorbed on the target set: solves G = mu' + G' Ptilde where Ptilde
// zeroes the rows of target states. Entries at target states give the hitting
// distribution. Throws SingularSystemError when the chain is not almost
// surely absorbed.
inline std::vector<double> green_function_oracle(const DenseMatrix& transition,
                                                 const std::vector<double>& mu,
                                                 const std::vector<bool>& is_target) {
  const int n = transition.rows;
  if (transition.cols != n || static_cast<int>(mu.size()) != n ||
      static_cast<int>(is_target.size()) != n)
    throw std::invalid_argument("green_function_oracle: dimension mismatch");
  // (I - Ptilde') g = mu
  DenseMatrix sys(n, n);
  for (int i = 0; i < n; ++i) {
    sys.at(i, i) = 1.0;
    for (int j = 0; j < n; ++j) {
      if (is_target[j]) continue;  // killed row of Ptilde
      sys.at(i, j) -= transition.at(j, i);
    }
  }
  return solve_linear(std::move(sys), mu);
}

}  // namespace revsmc
