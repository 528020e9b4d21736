#include "revsmc/hyperbolic.hpp"

#include <cmath>
#include <stdexcept>

#include "revsmc/quadrature.hpp"
#include "revsmc/special.hpp"

namespace revsmc {

namespace {
// 2 * K1(1), evaluated once
const double kTwoK1 = 2.0 * bessel_k1(1.0);
const double kLogTwoK1 = std::log(kTwoK1);
constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;
}  // namespace

void StripParams::validate() const {
  if (!(l0 < u0)) throw std::invalid_argument("hyperbolic: need l0 < u0");
  if (!(lt < ut)) throw std::invalid_argument("hyperbolic: need lt < ut");
  if (!(t > 0.0)) throw std::invalid_argument("hyperbolic: need t > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("hyperbolic: need delta in (0, 1)");
  const double ratio = t / delta;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw std::invalid_argument("hyperbolic: delta must divide t exactly");
}

int StripParams::steps() const { return static_cast<int>(std::round(t / delta)); }

double log_stationary_density(double x) {
  return -std::sqrt(1.0 + x * x) - kLogTwoK1;
}

double stationary_density(double x) { return std::exp(log_stationary_density(x)); }

double drift_mean(double x, double delta) {
  return x * (1.0 - delta / std::sqrt(1.0 + x * x));
}

double drift_mean_derivative(double x, double delta) {
  const double s = 1.0 + x * x;
  return 1.0 - delta / (s * std::sqrt(s));
}

double euler_forward_log_density(double x, double y, double delta) {
  const double d = y - drift_mean(x, delta);
  return -0.5 * d * d / delta - 0.5 * std::log(delta) - kHalfLog2Pi;
}

double euler_forward_density(double x, double y, double delta) {
  return std::exp(euler_forward_log_density(x, y, delta));
}

double invert_drift_map(double m_target, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("invert_drift_map: need delta in (0, 1)");
  if (m_target == 0.0) return 0.0;
  // m is strictly increasing with (1 - delta) x <= m(x) <= x for x >= 0
  double lo, hi;
  if (m_target > 0.0) {
    lo = m_target;
    hi = m_target / (1.0 - delta);
  } else {
    lo = m_target / (1.0 - delta);
    hi = m_target;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = drift_mean(x, delta) - m_target;
    if (std::abs(f) < 1e-15 * (1.0 + std::abs(m_target))) return x;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double step = f / drift_mean_derivative(x, delta);
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection fallback
    if (std::abs(next - x) < 1e-12 * (1.0 + std::abs(x))) return next;
    x = next;
  }
  throw std::runtime_error("invert_drift_map: did not converge");
}

HyperbolicModel::HyperbolicModel(const StripParams& params) : params_(params) {
  params_.validate();
}

std::pair<double, double> HyperbolicModel::strip_bounds(double s) const {
  const double lo = (params_.lt - params_.l0) / params_.t * s + params_.l0;
  const double hi = (params_.ut - params_.u0) / params_.t * s + params_.u0;
  return {lo, hi};
}

bool HyperbolicModel::is_target(const DiffState& s) const {
  if (s.step <= 0) return false;
  const auto [lo, hi] = strip_bounds(s.step * params_.delta);
  return !(s.x > lo && s.x < hi);
}

DiffState HyperbolicModel::terminal_sample(SplitMix64& rng) const {
  return {params_.steps(), rng.uniform(params_.lt, params_.ut)};
}

double HyperbolicModel::forward_log_density(const DiffState& x, const DiffState& y) const {
  if (y.step != x.step + 1) return kNegInf;
  return euler_forward_log_density(x.x, y.x, params_.delta);
}

double HyperbolicModel::proposal_normaliser(const DiffState& y) const {
  const double delta = params_.delta;
  const auto [lo, hi] = strip_bounds((y.step - 1) * delta);
  const double yx = y.x;
  return integrate(
      [yx, delta](double u) {
        return stationary_density(u) * euler_forward_density(u, yx, delta);
      },
      lo, hi, 1e-9);
}

double HyperbolicModel::reverse_log_density(const DiffState& y, const DiffState& x) const {
  if (x.step != y.step - 1) return kNegInf;
  const auto [lo, hi] = strip_bounds(x.step * params_.delta);
  if (!(x.x > lo && x.x < hi)) return kNegInf;
  return log_stationary_density(x.x) + euler_forward_log_density(x.x, y.x, params_.delta) -
         std::log(proposal_normaliser(y));
}

std::optional<ReverseStep<DiffState>> HyperbolicModel::reverse_propose(
    const DiffState& y, SplitMix64& rng) const {
  const double delta = params_.delta;
  const int m = y.step - 1;
  const auto [lo, hi] = strip_bounds(m * delta);
  const double sd = std::sqrt(delta);
  for (std::uint64_t attempt = 0; attempt < max_rejection_attempts_; ++attempt) {
    const double v = rng.normal(y.x, sd);
    const double x = invert_drift_map(v, delta);
    if (!(x > lo && x < hi)) continue;
    // accept with (1-delta) e^(1-sqrt(1+x^2)) / m'(x); the Jacobian factor
    // keeps the realised sampler density equal to the density in the weight
    const double accept = (1.0 - delta) * std::exp(1.0 - std::sqrt(1.0 + x * x)) /
                          drift_mean_derivative(x, delta);
    if (rng.uniform01() < accept) {
      const double c = proposal_normaliser(y);
      const double log_incr = std::log(c) - log_stationary_density(x);
      return ReverseStep<DiffState>{DiffState{m, x}, log_incr};
    }
  }
  throw RejectionError("hyperbolic reverse proposal: rejection sampler stalled");
}

std::pair<double, double> containment_oracle(const StripParams& params, long paths,
                                             std::uint64_t seed) {
  params.validate();
  if (paths < 1) throw std::invalid_argument("containment_oracle: need paths >= 1");
  const HyperbolicModel model(params);
  const int n_steps = params.steps();
  const double sd = std::sqrt(params.delta);
  // truncation mass of pi on (l0, u0)
  const double mass = integrate([](double u) { return stationary_density(u); }, params.l0,
                                params.u0, 1e-10);
  SplitMix64 rng(mix_seed(seed, 0x6f7261636cULL));
  long hits = 0;
  for (long p = 0; p < paths; ++p) {
    // draw from pi restricted to (l0, u0): Laplace envelope, then truncate
    double x;
    for (;;) {
      const double u = rng.uniform01();
      const double lap = (u < 0.5) ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
      if (rng.uniform01() >= std::exp(std::abs(lap) - std::sqrt(1.0 + lap * lap))) continue;
      if (lap > params.l0 && lap < params.u0) {
        x = lap;
        break;
      }
    }
    bool contained = true;
    for (int n = 1; n <= n_steps; ++n) {
      x = rng.normal(drift_mean(x, params.delta), sd);
      const auto [lo, hi] = model.strip_bounds(n * params.delta);
      if (!(x > lo && x < hi)) {
        contained = false;
        break;
      }
    }
    if (contained) ++hits;
  }
  if (hits == 0)
    throw std::runtime_error("containment_oracle: no containing path; geometry too rare");
  const double frac = static_cast<double>(hits) / static_cast<double>(paths);
  const double se = mass * std::sqrt(frac * (1.0 - frac) / static_cast<double>(paths));
  return {mass * frac, se};
}

}  // namespace revsmc
