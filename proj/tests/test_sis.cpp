#include <doctest.h>

#include <cmath>
#include <map>
#include <queue>
#include <sstream>

#include "revsmc/sis.hpp"
#include "toy_chain.hpp"

using namespace revsmc;

namespace {

SisState state_of(std::initializer_list<int> vs) {
  SisState s;
  for (int v : vs) s.add(v);
  return s;
}

bool is_contiguous(const SisState& s, const Network& net) {
  if (s.empty()) return true;
  std::map<int, bool> seen;
  std::queue<int> frontier;
  frontier.push(s.infected[0]);
  seen[s.infected[0]] = true;
  int reached = 0;
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    ++reached;
    for (int u : net.neighbors(v)) {
      if (!s.contains(u) || seen.count(u)) continue;
      seen[u] = true;
      frontier.push(u);
    }
  }
  return reached == s.count();
}

}  // namespace

TEST_SUITE_BEGIN("sis");

TEST_CASE("grid network structure") {
  const Network net = Network::grid(3, 4);
  CHECK(net.size() == 12);
  CHECK(net.degree(net.vertex_at(0, 0)) == 2);  // corner
  CHECK(net.degree(net.vertex_at(0, 1)) == 3);  // edge
  CHECK(net.degree(net.vertex_at(1, 1)) == 4);  // interior
  CHECK(net.up_of(net.vertex_at(2, 1)) == -1);
  CHECK(net.down_of(net.vertex_at(0, 1)) == -1);
  CHECK(net.left_of(net.vertex_at(1, 0)) == -1);
  CHECK(net.right_of(net.vertex_at(1, 3)) == -1);
  CHECK(net.up_of(net.vertex_at(1, 1)) == net.vertex_at(2, 1));
}

TEST_CASE("edge-list network loads and disables grid weights") {
  std::stringstream edges("0 1\n1 2\n2 3\n3 0\n");
  const Network net = Network::from_edge_list(edges);
  CHECK(net.size() == 4);
  CHECK(net.degree(0) == 2);
  CHECK(!net.has_grid_coords());
  const SisModel model(SisParams{1.0, 12.0, 1.0, 1e-4, 2}, net, state_of({0, 1}));
  CHECK(model.com_weight(0, state_of({1})) == 1.0);  // degrades to w == 1
}

TEST_CASE("centre-of-mass weight on the 3x3 fixtures") {
  const Network net = Network::grid(3, 3);
  const SisModel model(SisParams{1.0, 12.0, 1.0, 1e-4, 2}, net, state_of({0, 1}));
  const int center = net.vertex_at(1, 1);
  SUBCASE("no infected neighbours gives weight one") {
    CHECK(model.com_weight(center, state_of({net.vertex_at(0, 0)})) == 1.0);
  }
  SUBCASE("infection pulled away from the centre of mass is damped") {
    // v below the COM, infected neighbour above only
    const auto others = state_of({net.vertex_at(2, 1)});
    CHECK(model.com_weight(center, others) == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("infection towards the centre of mass is boosted") {
    // v still below the COM, infected neighbour below
    const auto others =
        state_of({net.vertex_at(0, 1), net.vertex_at(2, 0), net.vertex_at(2, 2)});
    CHECK(model.com_weight(center, others) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("exactly at the centre of mass in both axes") {
    const auto others = state_of({net.vertex_at(0, 1), net.vertex_at(2, 1)});
    CHECK(model.com_weight(center, others) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("own label of v is ignored") {
    auto with_v = state_of({net.vertex_at(2, 1), center});
    CHECK(model.com_weight(center, with_v) == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("conditional sampling distribution of a vertex label") {
  const Network net = Network::grid(3, 3);
  const SisParams params{1.0, 12.0, 1.0, 1e-4, 3};
  const SisModel model(params, net, state_of({0, 1, 2}));
  const int center = net.vertex_at(1, 1);
  SUBCASE("isolated vertex has odds epsilon to beta") {
    const auto [pj, ps] = model.csd(center, state_of({net.vertex_at(0, 0)}));
    CHECK(pj == doctest::Approx(1e-4 / (1e-4 + 12.0)).epsilon(1e-12));
    CHECK(pj + ps == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("two infected neighbours, weight one") {
    const auto others = state_of({net.vertex_at(0, 1), net.vertex_at(2, 1)});
    const auto [pj, ps] = model.csd(center, others);
    CHECK(pj == doctest::Approx(2.0001 / 14.0001).epsilon(1e-9));
    CHECK(pj == doctest::Approx(0.14286).epsilon(1e-3));
    CHECK(pj + ps == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("forward jump probabilities") {
  const Network net = Network::grid(5, 5);
  const SisParams params{1.0, 12.0, 1.0, 1e-4, 5};
  const SisModel model(params, net, state_of({0, 1, 2, 3, 4}));
  SUBCASE("entry moves are uniform over vertices") {
    for (int v : {0, 7, 24})
      CHECK(model.forward_jump_prob(SisState{}, state_of({v})) ==
            doctest::Approx(1.0 / 25.0).epsilon(1e-14));
    CHECK(model.forward_jump_prob(SisState{}, state_of({0, 1})) == 0.0);
  }
  SUBCASE("single interior infected: cure probability beta/(beta+4 alpha)") {
    const int center = net.vertex_at(2, 2);
    CHECK(model.forward_jump_prob(state_of({center}), SisState{}) ==
          doctest::Approx(12.0 / 16.0).epsilon(1e-12));
    CHECK(model.forward_jump_prob(state_of({center}), state_of({center, net.vertex_at(1, 2)})) ==
          doctest::Approx(1.0 / 16.0).epsilon(1e-12));
  }
  SUBCASE("jump probabilities sum to one over single-flip successors") {
    SplitMix64 rng(402);
    for (int trial = 0; trial < 30; ++trial) {
      SisState x;
      for (int v = 0; v < 25; ++v)
        if (rng.uniform01() < 0.3) x.add(v);
      if (x.empty()) x.add(3);
      double total = 0.0;
      for (int v = 0; v < 25; ++v) {
        SisState y = x;
        if (x.contains(v))
          y.remove(v);
        else
          y.add(v);
        total += model.forward_jump_prob(x, y);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("reverse proposal enumeration") {
  const Network net = Network::grid(3, 3);
  const SisParams params{1.0, 12.0, 1.0, 1e-4, 3};
  const auto observed = state_of({net.vertex_at(0, 0), net.vertex_at(0, 1), net.vertex_at(1, 1)});
  const SisModel model(params, net, observed);
  SUBCASE("probabilities sum to one") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 25; ++trial) {
      SisState y;
      for (int v = 0; v < 9; ++v)
        if (rng.uniform01() < 0.35) y.add(v);
      if (y.empty()) y.add(4);
      if (y == observed) y.remove(net.vertex_at(1, 1));
      double total = 0.0;
      for (const auto& c : model.enumerate_reverse(y)) {
        total += c.proposal_prob;
        CHECK(!(c.x == observed));  // first-hitting exclusion
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("singleton state proposes the empty predecessor") {
    const auto cands = model.enumerate_reverse(state_of({net.vertex_at(2, 2)}));
    bool has_empty = false;
    for (const auto& c : cands) {
      if (c.x.empty()) {
        has_empty = true;
        CHECK(c.forward_prob == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
      }
    }
    CHECK(has_empty);
  }
  SUBCASE("one-flip-from-observed excludes exactly the re-entering flip") {
    SisState y = observed;
    y.remove(net.vertex_at(0, 0));  // differs from observed at (0,0)
    for (const auto& c : model.enumerate_reverse(y)) CHECK(!(c.x == observed));
  }
  SUBCASE("candidate weights match the from-scratch CSD evaluation") {
    SplitMix64 rng(91);
    for (int trial = 0; trial < 20; ++trial) {
      SisState y;
      for (int v = 0; v < 9; ++v)
        if (rng.uniform01() < 0.4) y.add(v);
      if (y.empty() || y == observed) y = state_of({1, 4});
      const auto cands = model.enumerate_reverse(y);
      // recompute each candidate's unnormalised weight independently
      std::vector<double> raw;
      for (const auto& c : cands) {
        const auto [pj, ps] = model.csd(c.flip_vertex, y);
        const bool removes = y.contains(c.flip_vertex);
        const double ratio = removes ? ps / pj : pj / ps;
        raw.push_back(ratio * model.forward_jump_prob(c.x, y));
      }
      double total = 0.0;
      for (double r : raw) total += r;
      for (size_t i = 0; i < cands.size(); ++i)
        CHECK(cands[i].proposal_prob == doctest::Approx(raw[i] / total).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward epidemic generator") {
  const Network net = Network::grid(5, 5);
  SUBCASE("detection size one returns the entry vertex") {
    SisParams params{1.0, 12.0, 1.0, 1e-4, 1};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto draw = simulate_forward_epidemic(params, net, seed);
      CHECK(draw.observed.count() == 1);
      CHECK(draw.observed.infected[0] == draw.source);
    }
  }
  SUBCASE("observed size always equals the detection size") {
    SisParams params{1.0, 12.0, 1.0, 1e-4, 4};
    for (std::uint64_t seed = 0; seed < 10; ++seed)
      CHECK(simulate_forward_epidemic(params, net, seed).observed.count() == 4);
  }
}

TEST_CASE("detected epidemics are contiguous clusters" * doctest::timeout(600)) {
  const Network net = Network::grid(10, 10);
  SisParams params{1.0, 12.0, 1.0, 1e-4, 10};
  int contiguous = 0;
  const int draws = 30;
  for (int d = 0; d < draws; ++d) {
    const auto draw = simulate_forward_epidemic(params, net, 7000 + d);
    CHECK(draw.observed.count() == 10);
    if (is_contiguous(draw.observed, net)) ++contiguous;
  }
  // cures split clusters often enough that roughly a quarter of detected
  // configurations are disconnected at these rates; growth from a point
  // source still keeps a strong majority contiguous
  CHECK(contiguous >= draws / 2);
}

TEST_CASE("single-vertex network gives an indicator surface") {
  const Network net = Network::grid(1, 1);
  SisParams params{1.0, 12.0, 1.0, 1e-4, 1};
  const SisModel model(params, net, state_of({0}));
  const auto ens = run_reverse_smc(model, 50, 3);
  const auto surface = likelihood_surface(ens, 1);
  CHECK(surface[0] == doctest::Approx(1.0).epsilon(1e-14));
  for (const auto& p : ens.particles) CHECK(p.trajectory.size() == 2);
}

TEST_CASE("likelihood surface sums to one and finds the planted source") {
  const Network net = Network::grid(4, 4);
  SisParams params{1.0, 12.0, 1.0, 1e-4, 5};
  const auto draw = simulate_forward_epidemic(params, net, 99);
  const SisModel model(params, net, draw.observed);
  const auto ens = run_reverse_smc(model, 4000, 1234);
  const auto surface = likelihood_surface(ens, net.size());
  double total = 0.0;
  for (double v : surface) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  for (const auto& p : ens.particles) {
    if (!p.alive()) continue;
    CHECK(p.finished);
    CHECK(first_hitting_ok(model, p));
    CHECK(p.trajectory.states[p.trajectory.size() - 2].count() == 1);
  }
}

TEST_CASE("posterior on a line network matches exhaustive path enumeration") {
  // 3x1 grid: a - b - c with observed infection {a, b}. The regulariser is
  // set large enough that the proposal visits outlying-source histories at a
  // usable rate; tiny epsilon concentrates their mass on rare huge-weight
  // particles and the self-normalised surface then needs far more particles.
  const Network net = Network::grid(3, 1);
  SisParams params{1.0, 12.0, 1.0, 0.05, 2};
  const auto observed = state_of({0, 1});
  const SisModel model(params, net, observed);

  // exhaustive forward path sum over trajectories of bounded length
  std::map<int, double> mass;  // by first infected vertex
  struct Item {
    SisState state;
    double prob;
    int first;
  };
  std::vector<Item> frontier;
  for (int v = 0; v < 3; ++v)
    frontier.push_back({state_of({v}), model.forward_jump_prob(SisState{}, state_of({v})), v});
  const int max_steps = 24;
  for (int step = 0; step < max_steps && !frontier.empty(); ++step) {
    std::vector<Item> next;
    for (const auto& item : frontier) {
      for (int v = 0; v < 3; ++v) {
        SisState y = item.state;
        if (y.contains(v))
          y.remove(v);
        else
          y.add(v);
        const double pr = model.forward_jump_prob(item.state, y);
        if (pr <= 0.0) continue;
        if (y == observed) {
          mass[item.first] += item.prob * pr;
        } else if (!y.empty()) {
          next.push_back({y, item.prob * pr, item.first});
        }
      }
    }
    frontier = std::move(next);
  }
  double z = 0.0;
  for (const auto& [v, m] : mass) z += m;
  std::vector<double> expected(3, 0.0);
  for (const auto& [v, m] : mass) expected[v] = m / z;

  // ten engine replicates
  std::vector<double> mean(3, 0.0), var(3, 0.0);
  std::vector<std::vector<double>> surfaces;
  const int reps = 10;
  for (int r = 0; r < reps; ++r) {
    const auto ens = run_reverse_smc(model, 8000, mix_seed(4141, r));
    surfaces.push_back(likelihood_surface(ens, 3));
    for (int v = 0; v < 3; ++v) mean[v] += surfaces.back()[v];
  }
  for (int v = 0; v < 3; ++v) mean[v] /= reps;
  for (int r = 0; r < reps; ++r)
    for (int v = 0; v < 3; ++v)
      var[v] += (surfaces[r][v] - mean[v]) * (surfaces[r][v] - mean[v]);
  for (int v = 0; v < 3; ++v) {
    const double se = std::sqrt(var[v] / (reps - 1) / reps);
    CHECK(std::abs(mean[v] - expected[v]) <= std::max(3.0 * se, 1e-3));
  }
}

TEST_CASE("weight telescoping through resampling on the epidemic model") {
  const Network net = Network::grid(3, 3);
  SisParams params{1.0, 12.0, 1.0, 1e-4, 3};
  const auto observed = state_of({0, 1, 3});
  const SisModel model(params, net, observed);
  SmcOptions opts;
  opts.ess_threshold = 1.0;
  const auto ens = run_reverse_smc(model, 60, 9191, opts);
  for (const auto& p : ens.particles) {
    if (!p.alive()) continue;
    const double recomputed = testchain::recompute_log_weight(
        model, p, [&](const SisState& y) { return model.enumerate_reverse(y); });
    CHECK(std::abs(recomputed - p.log_weight) <=
          1e-10 * std::max(1.0, std::abs(p.log_weight)));
  }
}

TEST_SUITE_END();
