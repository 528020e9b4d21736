#include "revsmc/atm.hpp"

#include <cmath>
#include <stdexcept>

#include "revsmc/linalg.hpp"
#include "revsmc/special.hpp"

namespace revsmc {

void AtmParams::validate() const {
  if (sources < 1) throw std::invalid_argument("atm: sources (K) must be >= 1");
  if (barrier < 1) throw std::invalid_argument("atm: barrier (b) must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("atm: lambda must be > 0");
  if (!(mu > 0.0)) throw std::invalid_argument("atm: mu must be > 0");
  if (!(alpha0 > 0.0)) throw std::invalid_argument("atm: alpha0 must be > 0");
  if (!(alpha1 > 0.0)) throw std::invalid_argument("atm: alpha1 must be > 0");
}

AtmModel::AtmModel(const AtmParams& params, int terminal_on)
    : params_(params), terminal_on_(terminal_on) {
  params_.validate();
  if (terminal_on_ < 0 || terminal_on_ > params_.sources)
    throw std::invalid_argument("atm: terminal on-count outside 0..K");
  const int K = params_.sources;
  const int b = params_.barrier;

  csd_i_tab_.assign(static_cast<size_t>(K + 1) * (b + 1), 0.0);
  for (int j = 0; j <= K; ++j) {
    const double rho = params_.lambda * std::max(j, 1) / params_.mu;
    double z = 0.0, term = 1.0;
    for (int i = 0; i <= b; ++i) {
      csd_i_tab_[static_cast<size_t>(j) * (b + 1) + i] = term;
      z += term;
      term *= rho;
    }
    for (int i = 0; i <= b; ++i) csd_i_tab_[static_cast<size_t>(j) * (b + 1) + i] /= z;
  }

  const double p_on = params_.alpha0 / (params_.alpha0 + params_.alpha1);
  mu_tab_.resize(K + 1);
  for (int j = 0; j <= K; ++j) mu_tab_[j] = binomial_pmf(K, j, p_on);

  csd_j_tab_.assign(static_cast<size_t>(b + 1) * (K + 1), 0.0);
  for (int i = 0; i <= b; ++i) {
    double z = 0.0;
    for (int j = 0; j <= K; ++j) {
      const double v = mu_tab_[j] * csd_i(i, j);
      csd_j_tab_[static_cast<size_t>(i) * (K + 1) + j] = v;
      z += v;
    }
    for (int j = 0; j <= K; ++j) csd_j_tab_[static_cast<size_t>(i) * (K + 1) + j] /= z;
  }
}

double AtmModel::csd_i(int queue, int on) const {
  return csd_i_tab_[static_cast<size_t>(on) * (params_.barrier + 1) + queue];
}

double AtmModel::csd_j(int on, int queue) const {
  return csd_j_tab_[static_cast<size_t>(queue) * (params_.sources + 1) + on];
}

double AtmModel::entrance_mass(int on) const { return mu_tab_[on]; }

double AtmModel::initial_log_density(const AtmState& s) const {
  return std::log(mu_tab_[s.on]);
}

double AtmModel::total_rate(const AtmState& x) const {
  double r = params_.alpha0 * (params_.sources - x.on) + params_.alpha1 * x.on +
             params_.lambda * x.on;
  if (x.queue > 0) r += params_.mu;
  return r;
}

double AtmModel::forward_jump_prob(const AtmState& x, const AtmState& y) const {
  const int K = params_.sources;
  const int b = params_.barrier;
  if (x.queue < 0 || x.queue > b || x.on < 0 || x.on > K) return 0.0;
  if (y.queue < 0 || y.queue > b || y.on < 0 || y.on > K) return 0.0;
  if (x.queue == b) return 0.0;  // absorbing
  double rate = 0.0;
  if (y.queue == x.queue + 1 && y.on == x.on)
    rate = params_.lambda * x.on;
  else if (y.queue == x.queue - 1 && y.on == x.on)
    rate = x.queue > 0 ? params_.mu : 0.0;
  else if (y.queue == x.queue && y.on == x.on + 1)
    rate = params_.alpha0 * (K - x.on);
  else if (y.queue == x.queue && y.on == x.on - 1)
    rate = params_.alpha1 * x.on;
  if (rate <= 0.0) return 0.0;
  return rate / total_rate(x);
}

int AtmModel::build_candidates(const AtmState& y, RawCandidate out[4], double& total) const {
  const int K = params_.sources;
  const int b = params_.barrier;
  const int i = y.queue;
  const int j = y.on;
  int n = 0;
  total = 0.0;
  auto push = [&](AtmState x, double fwd, double csd_num, double csd_den) {
    if (fwd <= 0.0) return;
    const double w = csd_num / csd_den * fwd;
    out[n++] = {x, fwd, w};
    total += w;
  };
  // queue moves share the on-count; CSD ratio in pi_i(. | j)
  if (j >= 1 && i >= 1) {  // forward arrival from (i-1, j)
    const AtmState x{i - 1, j};
    push(x, params_.lambda * j / total_rate(x), csd_i(i - 1, j), csd_i(i, j));
  }
  if (i + 1 < b) {  // forward service from (i+1, j)
    const AtmState x{i + 1, j};
    push(x, params_.mu / total_rate(x), csd_i(i + 1, j), csd_i(i, j));
  }
  // on-count moves share the queue; CSD ratio in pi_j(. | i); predecessors at
  // the barrier are excluded by the T^c restriction
  if (i < b && j >= 1) {  // forward switch-on from (i, j-1)
    const AtmState x{i, j - 1};
    push(x, params_.alpha0 * (K - j + 1) / total_rate(x), csd_j(j - 1, i), csd_j(j, i));
  }
  if (i < b && j + 1 <= K) {  // forward switch-off from (i, j+1)
    const AtmState x{i, j + 1};
    push(x, params_.alpha1 * (j + 1) / total_rate(x), csd_j(j + 1, i), csd_j(j, i));
  }
  return n;
}

std::optional<ReverseStep<AtmState>> AtmModel::reverse_propose(const AtmState& y,
                                                               SplitMix64& rng) const {
  RawCandidate cand[4];
  double total = 0.0;
  const int n = build_candidates(y, cand, total);
  if (n == 0 || total <= 0.0) return std::nullopt;
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  int pick = n - 1;
  for (int c = 0; c < n; ++c) {
    acc += cand[c].weight;
    if (u < acc) {
      pick = c;
      break;
    }
  }
  // increment = P(x, y) / q(x | y) with q = weight / total
  const double log_incr =
      std::log(cand[pick].forward_prob) + std::log(total) - std::log(cand[pick].weight);
  return ReverseStep<AtmState>{cand[pick].x, log_incr};
}

std::vector<AtmModel::ReverseCandidate> AtmModel::enumerate_reverse(const AtmState& y) const {
  RawCandidate cand[4];
  double total = 0.0;
  const int n = build_candidates(y, cand, total);
  std::vector<ReverseCandidate> out;
  out.reserve(n);
  for (int c = 0; c < n; ++c) {
    const double q = cand[c].weight / total;
    out.push_back({cand[c].x, cand[c].forward_prob, q,
                   std::log(cand[c].forward_prob) - std::log(q)});
  }
  return out;
}

int atm_level_of(const Particle<AtmState>& p) {
  int lvl = std::numeric_limits<int>::max();
  for (const auto& s : p.trajectory.states) lvl = std::min(lvl, s.queue);
  return lvl;
}

std::vector<double> exact_hitting_distribution(const AtmParams& params) {
  params.validate();
  const int K = params.sources;
  const int b = params.barrier;
  if ((b + 1) * (K + 1) > 10000)
    throw std::invalid_argument("exact_hitting_distribution: instance too large");
  const AtmModel model(params, 0);

  // transient states 1 <= i <= b-1, any j
  const int m = (b - 1) * (K + 1);
  auto tindex = [&](int i, int j) { return (i - 1) * (K + 1) + j; };
  std::vector<double> result(K + 1, 0.0);
  if (m == 0) {
    // b == 1: a single forced arrival decides
    for (int j = 0; j <= K; ++j) {
      const double p_arr = model.forward_jump_prob({0, j}, {1, j});
      result[j] = model.entrance_mass(j) * p_arr;
    }
    return result;
  }

  for (int k = 0; k <= K; ++k) {
    DenseMatrix sys(m, m);
    std::vector<double> rhs(m, 0.0);
    for (int i = 1; i <= b - 1; ++i) {
      for (int j = 0; j <= K; ++j) {
        const int row = tindex(i, j);
        sys.at(row, row) = 1.0;
        const AtmState x{i, j};
        const AtmState moves[4] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
        for (const AtmState& y : moves) {
          const double pr = model.forward_jump_prob(x, y);
          if (pr <= 0.0) continue;
          if (y.queue >= 1 && y.queue <= b - 1)
            sys.at(row, tindex(y.queue, y.on)) -= pr;
          else if (y.queue == b && y.on == k)
            rhs[row] += pr;
        }
      }
    }
    const std::vector<double> h = solve_linear(std::move(sys), std::move(rhs));
    double total = 0.0;
    for (int j = 1; j <= K; ++j) {
      const double p_arr = model.forward_jump_prob({0, j}, {1, j});
      if (p_arr > 0.0) total += model.entrance_mass(j) * p_arr * h[tindex(1, j)];
    }
    result[k] = total;
  }
  return result;
}

double exact_hitting_probability(const AtmParams& params, int terminal_on) {
  if (terminal_on < 0 || terminal_on > params.sources)
    throw std::invalid_argument("exact_hitting_probability: k outside 0..K");
  return exact_hitting_distribution(params)[terminal_on];
}

}  // namespace revsmc
