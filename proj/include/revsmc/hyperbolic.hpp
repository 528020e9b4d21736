#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "revsmc/engine.hpp"
#include "revsmc/rng.hpp"

namespace revsmc {

struct RejectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Narrowing-strip geometry for the discretised hyperbolic diffusion: linear
// interpolation between the initial interval (l0, u0) at time 0 and the
// terminal interval (lt, ut) at time t, Euler step delta.
struct StripParams {
  double l0 = -1.0;
  double u0 = 1.0;
  double lt = 5.0;
  double ut = 5.1;
  double t = 2.0;
  double delta = 0.01;

  void validate() const;
  int steps() const;  // t / delta
};

struct DiffState {
  int step = 0;  // time index n, s = n * delta
  double x = 0.0;

  bool operator==(const DiffState&) const = default;
};

// Hyperbolic stationary density e^(-sqrt(1+x^2)) / (2 K1(1)).
double stationary_density(double x);
double log_stationary_density(double x);

// Euler transition density: Gaussian in y with mean drift_mean(x) and
// variance delta.
double drift_mean(double x, double delta);
double drift_mean_derivative(double x, double delta);
double euler_forward_density(double x, double y, double delta);
double euler_forward_log_density(double x, double y, double delta);

// Unique solution of drift_mean(x, delta) = m_target, by safeguarded Newton
// with a bisection fallback; requires delta < 1 so the map is strictly
// increasing.
double invert_drift_map(double m_target, double delta);

class HyperbolicModel {
 public:
  using State = DiffState;

  explicit HyperbolicModel(const StripParams& params);

  const StripParams& params() const { return params_; }

  bool is_initial(const DiffState& s) const { return s.step == 0; }
  // T is containment failure: a state on or outside the strip at its time
  bool is_target(const DiffState& s) const;
  double initial_log_density(const DiffState& s) const { return log_stationary_density(s.x); }
  DiffState terminal_sample(SplitMix64& rng) const;
  double terminal_log_density(const DiffState&) const { return -std::log(params_.ut - params_.lt); }
  int state_level(const DiffState& s) const { return s.step; }

  std::optional<ReverseStep<DiffState>> reverse_propose(const DiffState& y,
                                                        SplitMix64& rng) const;

  double forward_log_density(const DiffState& x, const DiffState& y) const;

  // open strip bounds at time s
  std::pair<double, double> strip_bounds(double s) const;

  // normalising constant C(y) = int_strip pi(u) phi_delta(y.x - drift_mean(u)) du
  // over the strip interval one step earlier
  double proposal_normaliser(const DiffState& y) const;
  // realised proposal density of predecessor x given y
  double reverse_log_density(const DiffState& y, const DiffState& x) const;

 private:
  StripParams params_;
  std::uint64_t max_rejection_attempts_ = 100000;
};

// Naive forward Monte Carlo of the same Euler chain from the truncated
// stationary law on (l0, u0); the truncation mass is folded in so the
// estimate targets the same unconditional containment probability as the
// reverse engine. Returns (estimate, std_error).
std::pair<double, double> containment_oracle(const StripParams& params, long paths,
                                             std::uint64_t seed);

}  // namespace revsmc
