#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "revsmc/events.hpp"
#include "revsmc/rng.hpp"

namespace revsmc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One proposed reverse step: the sampled predecessor together with the log of
// the incremental importance weight, log P(x, y) - log q(x | y).
template <typename StateT>
struct ReverseStep {
  StateT predecessor;
  double log_increment;
};

// Contract a model must fulfil to drive the engine. Models additionally
// expose a pointwise forward density; the engine itself never needs it but
// the weight-recomputation checks do.
template <typename M>
concept ReverseModel = requires(const M m, const typename M::State& s, SplitMix64& rng) {
  { m.is_initial(s) } -> std::convertible_to<bool>;
  { m.is_target(s) } -> std::convertible_to<bool>;
  { m.initial_log_density(s) } -> std::convertible_to<double>;
  { m.terminal_sample(rng) } -> std::convertible_to<typename M::State>;
  { m.terminal_log_density(s) } -> std::convertible_to<double>;
  { m.state_level(s) } -> std::convertible_to<int>;
  { m.reverse_propose(s, rng) } -> std::convertible_to<std::optional<ReverseStep<typename M::State>>>;
};

// States in reverse construction order: index 0 is the terminal draw from nu,
// the last entry is the state that finished the particle in I.
template <typename StateT>
struct Trajectory {
  std::vector<StateT> states;

  size_t size() const { return states.size(); }
  const StateT& current() const { return states.back(); }
  // i-th state in forward time (0 = the I-state the chain left from)
  const StateT& forward_at(size_t i) const { return states[states.size() - 1 - i]; }
};

// Weight substitution applied by a resampling event: once the trajectory had
// `steps_done` states, the log weight was reset to `log_weight_set`.
struct ResampleMark {
  size_t steps_done;
  double log_weight_set;
};

template <typename StateT>
struct Particle {
  Trajectory<StateT> trajectory;
  double log_weight = 0.0;  // -inf once zeroed
  int level_index = 0;
  int ancestor = 0;
  bool finished = false;
  std::uint64_t steps = 0;
  SplitMix64 stream;
  std::vector<ResampleMark> marks;

  bool alive() const { return log_weight > kNegInf; }
  double weight() const { return std::exp(log_weight); }
};

struct LevelEss {
  int level;
  double ess;
};

struct RunDiagnostics {
  std::vector<LevelEss> ess_trace;
  int resample_events = 0;
  int zeroed_particles = 0;
  double elapsed_seconds = 0.0;
};

template <typename StateT>
struct Ensemble {
  std::vector<Particle<StateT>> particles;
  double log_mean_weight = kNegInf;  // \bar w after the most recent equalisation
  RunDiagnostics diagnostics;

  int size() const { return static_cast<int>(particles.size()); }
};

struct EstimateSummary {
  double estimate = 0.0;
  double std_error = 0.0;
  std::vector<LevelEss> ess_trace;
  int resample_events = 0;
  double elapsed_seconds = 0.0;
};

enum class ResampleScheme { Multinomial, Systematic };

struct SmcOptions {
  double ess_threshold = 0.5;        // resample when ESS < threshold * N
  std::uint64_t step_cap = 1000000;  // reverse steps per particle before zeroing
  ResampleScheme scheme = ResampleScheme::Multinomial;
  int threads = 1;  // particle propagation between barriers
};

// --- effective sample size ---------------------------------------------------

// (sum w)^2 / sum w^2 for nonnegative weights; in [1, N] when some weight is
// positive.
inline double ess(std::span<const double> weights) {
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  if (s2 <= 0.0) throw DegeneracyError("ess: all weights are zero");
  return s * s / s2;
}

inline double ess_log(std::span<const double> log_weights) {
  double m = kNegInf;
  for (double lw : log_weights) m = std::max(m, lw);
  if (m == kNegInf) throw DegeneracyError("ess: all weights are zero");
  double s = 0.0, s2 = 0.0;
  for (double lw : log_weights) {
    const double t = std::exp(lw - m);
    s += t;
    s2 += t * t;
  }
  return s * s / s2;
}

namespace detail {

template <typename StateT>
inline std::vector<double> log_weights_of(const Ensemble<StateT>& ens) {
  std::vector<double> lw;
  lw.reserve(ens.particles.size());
  for (const auto& p : ens.particles) lw.push_back(p.log_weight);
  return lw;
}

// log of the mean weight, computed stably
inline double log_mean_weight(std::span<const double> log_weights) {
  double m = kNegInf;
  for (double lw : log_weights) m = std::max(m, lw);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double lw : log_weights) s += std::exp(lw - m);
  return m + std::log(s / static_cast<double>(log_weights.size()));
}

template <typename StateT>
inline void apply_ancestors(Ensemble<StateT>& ens, const std::vector<int>& ancestors,
                            double log_mean) {
  const int n = ens.size();
  std::vector<Particle<StateT>> next;
  next.reserve(n);
  for (int j = 0; j < n; ++j) {
    const Particle<StateT>& src = ens.particles[ancestors[j]];
    Particle<StateT> p;
    p.trajectory = src.trajectory;
    p.level_index = src.level_index;
    p.finished = src.finished;
    p.steps = src.steps;
    p.marks = src.marks;
    p.ancestor = ancestors[j];
    p.log_weight = log_mean;
    p.stream = ens.particles[j].stream;  // each slot keeps its own stream
    p.marks.push_back({p.trajectory.size(), log_mean});
    next.push_back(std::move(p));
  }
  ens.particles = std::move(next);
  ens.log_mean_weight = log_mean;
}

}  // namespace detail

// Multinomial resampling per the A_j ~ sum_k w_k delta_k rule: every offspring
// copies an ancestor drawn proportionally to weight and all weights are set to
// the pre-resampling mean.
template <typename StateT>
inline void resample_multinomial(Ensemble<StateT>& ens, SplitMix64& rng) {
  const int n = ens.size();
  const auto lw = detail::log_weights_of(ens);
  double m = kNegInf;
  for (double v : lw) m = std::max(m, v);
  if (m == kNegInf) throw DegeneracyError("resample: all weights are zero");
  std::vector<double> cum(n);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    total += std::exp(lw[j] - m);
    cum[j] = total;
  }
  std::vector<int> ancestors(n);
  for (int j = 0; j < n; ++j) {
    const double u = (1.0 - rng.uniform01()) * total;  // (0, total]: zero-weight slots unreachable
    ancestors[j] = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (ancestors[j] >= n) ancestors[j] = n - 1;
  }
  detail::apply_ancestors(ens, ancestors, m + std::log(total / n));
}

// Systematic variant (single uniform, stratified positions); offered as a
// config option, multinomial stays the default.
template <typename StateT>
inline void resample_systematic(Ensemble<StateT>& ens, SplitMix64& rng) {
  const int n = ens.size();
  const auto lw = detail::log_weights_of(ens);
  double m = kNegInf;
  for (double v : lw) m = std::max(m, v);
  if (m == kNegInf) throw DegeneracyError("resample: all weights are zero");
  std::vector<double> cum(n);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    total += std::exp(lw[j] - m);
    cum[j] = total;
  }
  const double u0 = 1.0 - rng.uniform01();  // (0, 1]
  std::vector<int> ancestors(n);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    const double u = (j + u0) / n * total;
    while (k < n - 1 && cum[k] < u) ++k;
    ancestors[j] = k;
  }
  detail::apply_ancestors(ens, ancestors, m + std::log(total / n));
}

namespace detail {

enum class StepOutcome { Crossed, Finished, ZeroedEmptySupport, ZeroedStepCap };

// Propagate one particle backwards until its level drops below the barrier,
// it hits I, or it dies.
template <ReverseModel M>
inline StepOutcome propagate_until_below(const M& model, Particle<typename M::State>& p,
                                         int barrier, const SmcOptions& opts) {
  while (p.level_index >= barrier) {
    auto step = model.reverse_propose(p.trajectory.current(), p.stream);
    if (!step) {
      p.log_weight = kNegInf;
      return StepOutcome::ZeroedEmptySupport;
    }
    p.trajectory.states.push_back(step->predecessor);
    p.log_weight += step->log_increment;
    p.level_index = std::min(p.level_index, model.state_level(step->predecessor));
    if (model.is_initial(step->predecessor)) {
      p.finished = true;
      p.log_weight += model.initial_log_density(step->predecessor);
      return StepOutcome::Finished;
    }
    if (++p.steps >= opts.step_cap) {
      p.log_weight = kNegInf;
      return StepOutcome::ZeroedStepCap;
    }
  }
  return StepOutcome::Crossed;
}

}  // namespace detail

// Reverse-time multilevel SMC. Particles start from the terminal law nu with
// weight 1/nu(x), are propagated backwards through the model's level schedule
// with an ESS-triggered resampling check each time all live particles have
// crossed the current barrier, and collect the entrance law mu on hitting I.
template <ReverseModel M>
inline Ensemble<typename M::State> run_reverse_smc(const M& model, int n_particles,
                                                   std::uint64_t seed,
                                                   const SmcOptions& opts = {},
                                                   EventSink* sink = nullptr) {
  using StateT = typename M::State;
  if (n_particles < 1) throw std::invalid_argument("run_reverse_smc: need N >= 1");
  if (sink == nullptr) sink = &null_sink();
  const auto t0 = std::chrono::steady_clock::now();

  Ensemble<StateT> ens;
  ens.particles.resize(n_particles);
  for (int j = 0; j < n_particles; ++j) {
    Particle<StateT>& p = ens.particles[j];
    p.stream = SplitMix64(particle_stream_seed(seed, j));
    StateT x0 = model.terminal_sample(p.stream);
    p.log_weight = -model.terminal_log_density(x0);
    p.level_index = model.state_level(x0);
    p.ancestor = j;
    if (model.is_initial(x0)) {
      p.finished = true;
      p.log_weight += model.initial_log_density(x0);
    }
    p.trajectory.states.push_back(std::move(x0));
  }
  SplitMix64 resample_rng(resample_stream_seed(seed));
  {
    const auto lw = detail::log_weights_of(ens);
    ens.log_mean_weight = detail::log_mean_weight(lw);
  }

  std::vector<detail::StepOutcome> outcomes(n_particles, detail::StepOutcome::Crossed);
  while (true) {
    bool any_alive = false, any_running = false;
    int barrier = std::numeric_limits<int>::min();
    for (const auto& p : ens.particles) {
      if (!p.alive()) continue;
      any_alive = true;
      if (!p.finished) {
        any_running = true;
        barrier = std::max(barrier, p.level_index);
      }
    }
    if (!any_alive) {
      sink->degeneracy("run_reverse_smc");
      throw DegeneracyError("run_reverse_smc: every particle has zero weight");
    }
    if (!any_running) break;

    const auto lw = detail::log_weights_of(ens);
    const double e = ess_log(lw);
    ens.diagnostics.ess_trace.push_back({barrier, e});
    const bool do_resample = e < opts.ess_threshold * n_particles;
    if (do_resample) {
      if (opts.scheme == ResampleScheme::Multinomial)
        resample_multinomial(ens, resample_rng);
      else
        resample_systematic(ens, resample_rng);
      ++ens.diagnostics.resample_events;
    }
    sink->level_crossed(barrier, e, do_resample);

    auto work = [&](int lo, int hi) {
      for (int j = lo; j < hi; ++j) {
        Particle<StateT>& p = ens.particles[j];
        if (!p.alive() || p.finished || p.level_index < barrier) {
          outcomes[j] = detail::StepOutcome::Crossed;
          continue;
        }
        outcomes[j] = detail::propagate_until_below(model, p, barrier, opts);
      }
    };
    if (opts.threads > 1) {
      const int nt = std::min<int>(opts.threads, n_particles);
      std::vector<std::thread> pool;
      pool.reserve(nt);
      const int chunk = (n_particles + nt - 1) / nt;
      for (int t = 0; t < nt; ++t)
        pool.emplace_back(work, t * chunk, std::min(n_particles, (t + 1) * chunk));
      for (auto& th : pool) th.join();
    } else {
      work(0, n_particles);
    }
    for (int j = 0; j < n_particles; ++j) {
      if (outcomes[j] == detail::StepOutcome::ZeroedEmptySupport) {
        ++ens.diagnostics.zeroed_particles;
        sink->particle_zeroed(j, "empty proposal support");
      } else if (outcomes[j] == detail::StepOutcome::ZeroedStepCap) {
        ++ens.diagnostics.zeroed_particles;
        sink->particle_zeroed(j, "step cap exceeded");
      }
    }
  }

  ens.diagnostics.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return ens;
}

// --- estimators ---------------------------------------------------------------

// Unbiased estimator N^-1 sum_j f(path_j) w_j of the unconditional functional.
template <typename StateT, typename F>
inline EstimateSummary estimate_unconditional(const Ensemble<StateT>& ens, F&& f) {
  const int n = ens.size();
  double m = kNegInf;
  for (const auto& p : ens.particles) m = std::max(m, p.log_weight);
  EstimateSummary out;
  out.ess_trace = ens.diagnostics.ess_trace;
  out.resample_events = ens.diagnostics.resample_events;
  out.elapsed_seconds = ens.diagnostics.elapsed_seconds;
  if (m == kNegInf) return out;  // all-dead ensemble: estimate 0
  std::vector<double> terms(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const auto& p = ens.particles[j];
    if (!p.alive()) continue;
    terms[j] = f(p.trajectory) * std::exp(p.log_weight - m);
  }
  double s = 0.0;
  for (double t : terms) s += t;
  const double mean = s / n;
  out.estimate = std::exp(m) * mean;
  if (n > 1) {
    double ss = 0.0;
    for (double t : terms) ss += (t - mean) * (t - mean);
    out.std_error = std::exp(m) * std::sqrt(ss / (n - 1) / n);
  }
  return out;
}

// Self-normalised ratio estimator of the conditional functional; consistent
// but not unbiased.
template <typename StateT, typename F>
inline EstimateSummary estimate_conditional(const Ensemble<StateT>& ens, F&& f) {
  const int n = ens.size();
  double m = kNegInf;
  for (const auto& p : ens.particles) m = std::max(m, p.log_weight);
  if (m == kNegInf)
    throw DegeneracyError("estimate_conditional: zero total weight");
  std::vector<double> w(n, 0.0), fv(n, 0.0);
  double wsum = 0.0;
  for (int j = 0; j < n; ++j) {
    const auto& p = ens.particles[j];
    if (!p.alive()) continue;
    w[j] = std::exp(p.log_weight - m);
    fv[j] = f(p.trajectory);
    wsum += w[j];
  }
  EstimateSummary out;
  out.ess_trace = ens.diagnostics.ess_trace;
  out.resample_events = ens.diagnostics.resample_events;
  out.elapsed_seconds = ens.diagnostics.elapsed_seconds;
  double num = 0.0;
  for (int j = 0; j < n; ++j) num += w[j] * fv[j];
  const double theta = num / wsum;
  out.estimate = theta;
  double var = 0.0;
  for (int j = 0; j < n; ++j) {
    const double wt = w[j] / wsum;
    var += wt * wt * (fv[j] - theta) * (fv[j] - theta);
  }
  out.std_error = std::sqrt(var);
  return out;
}

// Checks the first-hitting bookkeeping on a completed particle: interior
// states lie in neither T nor I, the trajectory ends in I, and only index 0
// may lie in T (the final state may too, for models where I is a subset of T).
template <ReverseModel M>
inline bool first_hitting_ok(const M& model, const Particle<typename M::State>& p) {
  const auto& st = p.trajectory.states;
  if (st.empty() || !model.is_initial(st.back())) return false;
  if (st.size() >= 2 && model.is_initial(st.front())) return false;
  for (size_t i = 1; i + 1 < st.size(); ++i)
    if (model.is_target(st[i]) || model.is_initial(st[i])) return false;
  return true;
}

}  // namespace revsmc
