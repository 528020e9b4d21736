#include "revsmc/splitting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace revsmc {

void SplittingConfig::validate() const {
  if (particles < 2) throw std::invalid_argument("splitting: need N >= 2");
  if (kill_count < 1 || kill_count >= particles)
    throw std::invalid_argument("splitting: need 1 <= kill_count < N");
  if (mcmc_steps < 1) throw std::invalid_argument("splitting: need mcmc_steps >= 1");
  if (max_iterations < 1) throw std::invalid_argument("splitting: need max_iterations >= 1");
}

namespace {

double idealised_se(double p, int n) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return p * std::sqrt(-std::log(p) / n);
}

// Shared kill-clone-move loop. Each iteration sets the level to the
// kill_count-th smallest psi, discards every particle at or below it (the
// whole tie class, so levels are strictly increasing and the random killed
// fraction keeps the estimator consistent for discrete psi), and regrows the
// killed slots from uniformly chosen survivors pushed strictly above the
// level by the kernel.
template <typename PathT, typename PsiT>
struct AmsLoop {
  int n_particles;
  int kill_count;
  long max_iterations;
  std::vector<PathT>& paths;
  std::vector<PsiT>& psis;

  // gap_half: exact level spacing for integer psi, half the grid spacing for
  // real-valued psi; either makes "level + gap_half" mean strictly above and
  // "target - gap_half" mean strictly below
  template <typename MoveFn>
  long run(PsiT target, PsiT gap_half, MoveFn&& move, EventSink& sink, double& factor_log) {
    const int n = n_particles;
    long iterations = 0;
    std::vector<int> order(n);
    std::vector<int> killed;
    factor_log = 0.0;
    for (;;) {
      PsiT min_psi = psis[0];
      for (int j = 1; j < n; ++j) min_psi = std::min(min_psi, psis[j]);
      if (min_psi >= target) break;
      std::iota(order.begin(), order.end(), 0);
      std::nth_element(order.begin(), order.begin() + (kill_count - 1), order.end(),
                       [&](int a, int b) { return psis[a] < psis[b]; });
      PsiT level = psis[order[kill_count - 1]];
      // never kill above the target event
      if (level >= target) level = target - gap_half;
      killed.clear();
      for (int j = 0; j < n; ++j)
        if (psis[j] <= level) killed.push_back(j);
      const int m = static_cast<int>(killed.size());
      if (m == n)
        throw StagnationError(
            "adaptive splitting: population extinct below the target level");
      factor_log += std::log1p(-static_cast<double>(m) / n);
      if (++iterations > max_iterations)
        throw StagnationError("adaptive splitting: iteration guard exceeded");
      sink.splitting_level(iterations, static_cast<double>(level));
      const PsiT required = level + gap_half;  // clones stay strictly above the level
      std::vector<int> survivors;
      survivors.reserve(n - m);
      for (int j = 0; j < n; ++j)
        if (psis[j] > level) survivors.push_back(j);
      for (const int slot : killed) {
        const int donor = survivors[move.pick_survivor(survivors.size())];
        paths[slot] = paths[donor];
        psis[slot] = psis[donor];
        move.apply(slot, required);
      }
    }
    return iterations;
  }
};

}  // namespace

// --- ATM ----------------------------------------------------------------------

AtmSplitting::AtmSplitting(const AtmParams& params, const SplittingConfig& config)
    : params_(params), config_(config), model_(params, 0) {
  config_.validate();
}

int AtmSplitting::psi(const Path& path) {
  int m = 0;
  for (const auto& s : path) m = std::max(m, s.queue);
  return m;
}

int AtmSplitting::sample_initial_on(SplitMix64& rng) const {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (int j = 0; j <= params_.sources; ++j) {
    acc += model_.entrance_mass(j);
    if (u < acc) return j;
  }
  return params_.sources;
}

AtmState AtmSplitting::sample_forward_step(const AtmState& x, SplitMix64& rng) const {
  const int K = params_.sources;
  double rate[4];
  AtmState to[4];
  int n = 0;
  if (x.on >= 1 && x.queue < params_.barrier) {
    rate[n] = params_.lambda * x.on;
    to[n++] = {x.queue + 1, x.on};
  }
  if (x.queue >= 1) {
    rate[n] = params_.mu;
    to[n++] = {x.queue - 1, x.on};
  }
  if (x.on < K) {
    rate[n] = params_.alpha0 * (K - x.on);
    to[n++] = {x.queue, x.on + 1};
  }
  if (x.on >= 1) {
    rate[n] = params_.alpha1 * x.on;
    to[n++] = {x.queue, x.on - 1};
  }
  double total = 0.0;
  for (int c = 0; c < n; ++c) total += rate[c];
  double u = rng.uniform01() * total;
  for (int c = 0; c < n; ++c) {
    if (u < rate[c]) return to[c];
    u -= rate[c];
  }
  return to[n - 1];
}

AtmSplitting::Path AtmSplitting::simulate_unconditional(SplitMix64& rng) const {
  Path path;
  path.push_back({0, sample_initial_on(rng)});
  for (;;) {
    const AtmState next = sample_forward_step(path.back(), rng);
    path.push_back(next);
    if (next.queue == 0 || next.queue == params_.barrier) return path;
  }
}

// Path move preserving the conditioned law P_mu(. | Psi >= level): a uniform
// non-initial time point is chosen and the path is regrown from there with
// the unconditional dynamics until it hits T. The proposal density telescopes
// against the path law, leaving the Metropolis ratio min(1, m/m') in the step
// counts; proposals below the level are rejected.
AtmSplitting::Path AtmSplitting::mcmc_kernel(const Path& path, int level,
                                             SplitMix64& rng) const {
  const int b = params_.barrier;
  const int len = static_cast<int>(path.size());
  if (len < 2) return path;
  const int t = 1 + static_cast<int>(rng.uniform_int(len - 1));  // step index in 1..len-1

  Path prop(path.begin(), path.begin() + t);
  do {
    prop.push_back(sample_forward_step(prop.back(), rng));
  } while (prop.back().queue != 0 && prop.back().queue != b);
  if (psi(prop) < level) return path;
  const double ratio = static_cast<double>(len - 1) / static_cast<double>(prop.size() - 1);
  if (ratio < 1.0 && rng.uniform01() >= ratio) return path;
  return prop;
}

AmsResult AtmSplitting::run(std::uint64_t seed, EventSink* sink, int target_level) const {
  if (sink == nullptr) sink = &null_sink();
  if (target_level < 0) target_level = params_.barrier;
  const auto t0 = std::chrono::steady_clock::now();
  const int n = config_.particles;
  SplitMix64 rng(mix_seed(seed, 0x616d73ULL));

  std::vector<Path> paths(n);
  std::vector<int> psis(n);
  for (int j = 0; j < n; ++j) {
    paths[j] = simulate_unconditional(rng);
    psis[j] = psi(paths[j]);
  }

  struct Move {
    const AtmSplitting* self;
    std::vector<Path>* paths;
    std::vector<int>* psis;
    SplitMix64* rng;
    std::uint64_t pick_survivor(std::size_t count) { return rng->uniform_int(count); }
    void apply(int slot, int level) {
      for (int m = 0; m < self->config_.mcmc_steps; ++m)
        (*paths)[slot] = self->mcmc_kernel((*paths)[slot], level, *rng);
      (*psis)[slot] = psi((*paths)[slot]);
    }
  } move{this, &paths, &psis, &rng};

  AmsLoop<Path, int> loop{n, config_.kill_count, config_.max_iterations, paths, psis};
  double factor_log = 0.0;
  const long iterations = loop.run(target_level, 1, move, *sink, factor_log);

  int successes = 0;
  std::vector<int> terminal_counts(params_.sources + 1, 0);
  for (int j = 0; j < n; ++j) {
    if (psis[j] >= target_level) {
      ++successes;
      const AtmState& last = paths[j].back();
      if (last.queue == params_.barrier) ++terminal_counts[last.on];
    }
  }
  const double fraction = static_cast<double>(successes) / n;
  AmsResult out;
  out.iterations = iterations;
  out.final_level = target_level;
  out.success_fraction = fraction;
  out.estimate = std::exp(factor_log) * fraction;
  out.std_error = idealised_se(out.estimate, n);
  out.per_terminal.resize(params_.sources + 1, 0.0);
  if (successes > 0) {
    for (int k = 0; k <= params_.sources; ++k)
      out.per_terminal[k] =
          out.estimate * static_cast<double>(terminal_counts[k]) / successes;
  }
  out.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// --- diffusion ------------------------------------------------------------------

DiffusionSplitting::DiffusionSplitting(const StripParams& params,
                                       const SplittingConfig& config)
    : params_(params), config_(config), model_(params) {
  config_.validate();
}

bool DiffusionSplitting::contained(const Path& path) const {
  return path.complete_contained;
}

double DiffusionSplitting::psi(const Path& path) const {
  const int n_steps = params_.steps();
  const int last = static_cast<int>(path.x.size()) - 1;
  if (last >= n_steps) return params_.t;
  return last * params_.delta;  // exit time
}

DiffusionSplitting::Path DiffusionSplitting::simulate_unconditional(double x0,
                                                                    SplitMix64& rng) const {
  Path path;
  path.x.push_back(x0);
  const int n_steps = params_.steps();
  const double sd = std::sqrt(params_.delta);
  for (int n = 1; n <= n_steps; ++n) {
    const double next = rng.normal(drift_mean(path.x.back(), params_.delta), sd);
    path.x.push_back(next);
    const auto [lo, hi] = model_.strip_bounds(n * params_.delta);
    if (!(next > lo && next < hi)) return path;  // exit state kept, path complete
  }
  path.complete_contained = true;
  return path;
}

// Same move as the ATM kernel: regrow the path from a uniform non-initial
// grid time with the Euler dynamics, truncating on strip exit, with the
// min(1, m/m') Metropolis factor and rejection below the level.
DiffusionSplitting::Path DiffusionSplitting::mcmc_kernel(const Path& path, double level,
                                                         SplitMix64& rng) const {
  const int len = static_cast<int>(path.x.size());
  if (len < 2) return path;
  const int n_steps = params_.steps();
  const double delta = params_.delta;
  const double sd = std::sqrt(delta);
  const int s = 1 + static_cast<int>(rng.uniform_int(len - 1));

  Path prop;
  prop.x.assign(path.x.begin(), path.x.begin() + s);
  bool exited = false;
  while (!exited && static_cast<int>(prop.x.size()) - 1 < n_steps) {
    const int m = static_cast<int>(prop.x.size());
    const double next = rng.normal(drift_mean(prop.x.back(), delta), sd);
    prop.x.push_back(next);
    const auto [lo, hi] = model_.strip_bounds(m * delta);
    exited = !(next > lo && next < hi);
  }
  prop.complete_contained = !exited;
  if (psi(prop) < level) return path;
  const double ratio = static_cast<double>(len - 1) / static_cast<double>(prop.x.size() - 1);
  if (ratio < 1.0 && rng.uniform01() >= ratio) return path;
  return prop;
}

AmsResult DiffusionSplitting::run_single(double x0, std::uint64_t seed,
                                         EventSink* sink) const {
  if (sink == nullptr) sink = &null_sink();
  const auto t0 = std::chrono::steady_clock::now();
  const int n = config_.particles;
  SplitMix64 rng(mix_seed(seed, 0x64616d73ULL));
  std::vector<Path> paths(n);
  std::vector<double> psis(n);
  for (int j = 0; j < n; ++j) {
    paths[j] = simulate_unconditional(x0, rng);
    psis[j] = psi(paths[j]);
  }

  struct Move {
    const DiffusionSplitting* self;
    std::vector<Path>* paths;
    std::vector<double>* psis;
    SplitMix64* rng;
    std::uint64_t pick_survivor(std::size_t count) { return rng->uniform_int(count); }
    void apply(int slot, double level) {
      for (int m = 0; m < self->config_.mcmc_steps; ++m)
        (*paths)[slot] = self->mcmc_kernel((*paths)[slot], level, *rng);
      (*psis)[slot] = self->psi((*paths)[slot]);
    }
  } move{this, &paths, &psis, &rng};

  AmsLoop<Path, double> loop{n, config_.kill_count, config_.max_iterations, paths, psis};
  double factor_log = 0.0;
  const long iterations = loop.run(params_.t, 0.5 * params_.delta, move, *sink, factor_log);

  int successes = 0;
  for (int j = 0; j < n; ++j)
    if (contained(paths[j])) ++successes;
  AmsResult out;
  out.iterations = iterations;
  out.final_level = params_.t;
  out.success_fraction = static_cast<double>(successes) / n;
  out.estimate = std::exp(factor_log) * out.success_fraction;
  out.std_error = idealised_se(out.estimate, n);
  out.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

AmsResult DiffusionSplitting::run(int n_initial, std::uint64_t seed, EventSink* sink) const {
  if (n_initial < 1) throw std::invalid_argument("splitting: need n_initial >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(mix_seed(seed, 0x696e6974ULL));
  std::vector<double> values(n_initial);
  long iterations = 0;
  for (int i = 0; i < n_initial; ++i) {
    const double x0 = rng.uniform(params_.l0, params_.u0);
    const AmsResult single = run_single(x0, mix_seed(seed, 0x73696e67ULL, i), sink);
    values[i] = stationary_density(x0) * single.estimate;
    iterations += single.iterations;
  }
  const double width = params_.u0 - params_.l0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n_initial;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = n_initial > 1 ? var / (n_initial - 1) : 0.0;
  AmsResult out;
  out.estimate = width * mean;
  out.std_error = width * std::sqrt(var / n_initial);
  out.iterations = iterations;
  out.final_level = params_.t;
  out.success_fraction = 0.0;
  out.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace revsmc
