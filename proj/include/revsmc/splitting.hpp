#pragma once

#include <cstdint>
#include <vector>

#include "revsmc/atm.hpp"
#include "revsmc/events.hpp"
#include "revsmc/hyperbolic.hpp"
#include "revsmc/rng.hpp"

namespace revsmc {

struct StagnationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SplittingConfig {
  int particles = 1000;  // N
  int kill_count = 1;    // level order statistic; the whole tie class is discarded
  long max_iterations = 1000000;  // loop guard before declaring the run infeasible
  int mcmc_steps = 1;    // kernel applications per clone

  void validate() const;
};

struct AmsResult {
  double estimate = 0.0;
  double std_error = 0.0;  // idealised p * sqrt(-log p / N) diagnostic
  long iterations = 0;
  double final_level = 0.0;
  double success_fraction = 0.0;
  double elapsed_seconds = 0.0;
  std::vector<double> per_terminal;  // ATM: estimate split by terminal on-count
};

// Adaptive multilevel splitting for the ATM barrier event, reaction
// coordinate Psi(path) = max queue length.
class AtmSplitting {
 public:
  using Path = std::vector<AtmState>;

  AtmSplitting(const AtmParams& params, const SplittingConfig& config);

  // estimates P(queue hits b before emptying) split by terminal on-count;
  // target_level defaults to the barrier
  AmsResult run(std::uint64_t seed, EventSink* sink = nullptr, int target_level = -1) const;

  static int psi(const Path& path);

  // forward path from mu until the first hit of queue length 0 or b
  Path simulate_unconditional(SplitMix64& rng) const;
  // the enumerated 3-step kernel: uniform time point, uniform new step,
  // direction reattachment with truncation/refill, rejection below level
  Path mcmc_kernel(const Path& path, int level, SplitMix64& rng) const;

  const AtmModel& model() const { return model_; }

 private:
  AtmState sample_forward_step(const AtmState& x, SplitMix64& rng) const;
  int sample_initial_on(SplitMix64& rng) const;

  AtmParams params_;
  SplittingConfig config_;
  AtmModel model_;  // reused for rates and the entrance law
};

// Adaptive multilevel splitting for the diffusion containment event from a
// fixed initial position, reaction coordinate Psi(path) = exit time (t when
// contained). The overall probability averages fixed-start runs over the
// initial law by naive Monte Carlo.
class DiffusionSplitting {
 public:
  struct Path {
    std::vector<double> x;  // positions at grid times 0..(size-1)
    bool complete_contained = false;
  };

  DiffusionSplitting(const StripParams& params, const SplittingConfig& config);

  AmsResult run_single(double x0, std::uint64_t seed, EventSink* sink = nullptr) const;
  // n_initial uniform draws on (l0, u0), weighted by the stationary density
  AmsResult run(int n_initial, std::uint64_t seed, EventSink* sink = nullptr) const;

  double psi(const Path& path) const;  // in time units
  bool contained(const Path& path) const;

  Path simulate_unconditional(double x0, SplitMix64& rng) const;
  Path mcmc_kernel(const Path& path, double level, SplitMix64& rng) const;

  const StripParams& params() const { return params_; }

 private:
  StripParams params_;
  SplittingConfig config_;
  HyperbolicModel model_;
};

}  // namespace revsmc
