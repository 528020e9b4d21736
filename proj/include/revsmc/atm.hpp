#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "revsmc/engine.hpp"
#include "revsmc/rng.hpp"

namespace revsmc {

// ATM queue with K on/off sources feeding one server. The embedded jump chain
// of the continuous-time dynamics is used throughout; jump probabilities are
// rate-proportional, which leaves hitting probabilities unchanged.
struct AtmParams {
  int sources = 20;      // K
  int barrier = 10;      // b, overflow level
  double lambda = 0.5;   // per-source packet rate
  double mu = 10.0;      // service rate
  double alpha0 = 1.0;   // off -> on
  double alpha1 = 3.0;   // on -> off

  void validate() const;
};

struct AtmState {
  int queue = 0;  // i in [0, b]
  int on = 0;     // j in [0, K]

  bool operator==(const AtmState&) const = default;
};

class AtmModel {
 public:
  using State = AtmState;

  // nu is a point mass at (b, terminal_on); one engine run per terminal
  // condition.
  AtmModel(const AtmParams& params, int terminal_on);

  const AtmParams& params() const { return params_; }
  int terminal_on() const { return terminal_on_; }

  bool is_initial(const AtmState& s) const { return s.queue == 0; }
  bool is_target(const AtmState& s) const {
    return s.queue == 0 || s.queue == params_.barrier;
  }
  double initial_log_density(const AtmState& s) const;
  AtmState terminal_sample(SplitMix64&) const { return {params_.barrier, terminal_on_}; }
  double terminal_log_density(const AtmState&) const { return 0.0; }
  int state_level(const AtmState& s) const { return s.queue; }

  std::optional<ReverseStep<AtmState>> reverse_propose(const AtmState& y,
                                                       SplitMix64& rng) const;

  // one-step probability of the embedded jump chain; 0 from the absorbing
  // barrier row
  double forward_jump_prob(const AtmState& x, const AtmState& y) const;

  // approximate conditional sampling distributions, normalised over their
  // finite ranges
  double csd_i(int queue, int on) const;  // pi_i(i | j)
  double csd_j(int on, int queue) const;  // pi_j(j | i)

  // entrance law mu{(0, j)} = Bin(K, alpha0/(alpha0+alpha1)) pmf at j
  double entrance_mass(int on) const;

  struct ReverseCandidate {
    AtmState x;
    double forward_prob;    // P(x, y)
    double proposal_prob;   // normalised
    double log_increment;   // log of forward_prob / proposal_prob
  };
  // All admissible predecessors of y with their proposal probabilities;
  // reverse_propose samples from exactly this distribution.
  std::vector<ReverseCandidate> enumerate_reverse(const AtmState& y) const;

 private:
  struct RawCandidate {
    AtmState x;
    double forward_prob;
    double weight;  // csd(x-part) / csd(y-part) * forward_prob, unnormalised
  };
  int build_candidates(const AtmState& y, RawCandidate out[4], double& total) const;
  double total_rate(const AtmState& x) const;

  AtmParams params_;
  int terminal_on_;
  std::vector<double> csd_i_tab_;  // (K+1) x (b+1), normalised per on-count
  std::vector<double> csd_j_tab_;  // (b+1) x (K+1), normalised per queue
  std::vector<double> mu_tab_;
};

// Running minimum queue length along the reverse trajectory; the level
// schedule counts down from b to 0 as the queue drains.
int atm_level_of(const Particle<AtmState>& p);

// Exact small-instance oracle: first-step linear system for the probability
// that the queue, started from mu and leaving the empty state through the
// forced arrival, hits (b, k) before emptying.
double exact_hitting_probability(const AtmParams& params, int terminal_on);
std::vector<double> exact_hitting_distribution(const AtmParams& params);

}  // namespace revsmc
