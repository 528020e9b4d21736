#include "revsmc/sis.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <stdexcept>

namespace revsmc {

void SisParams::validate(int n_vertices) const {
  if (!(alpha > 0.0)) throw std::invalid_argument("sis: alpha must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("sis: beta must be > 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("sis: gamma must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("sis: epsilon must be > 0");
  if (detection_size < 1 || detection_size > n_vertices)
    throw std::invalid_argument("sis: detection size M outside 1..|V|");
}

Network Network::grid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("network: grid dims must be >= 1");
  Network net;
  net.rows_ = rows;
  net.cols_ = cols;
  const int n = rows * cols;
  net.offsets_.assign(n + 1, 0);
  std::vector<std::vector<int>> adj(n);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int v = r * cols + c;
      if (r + 1 < rows) adj[v].push_back((r + 1) * cols + c);
      if (r - 1 >= 0) adj[v].push_back((r - 1) * cols + c);
      if (c + 1 < cols) adj[v].push_back(r * cols + c + 1);
      if (c - 1 >= 0) adj[v].push_back(r * cols + c - 1);
    }
  }
  for (int v = 0; v < n; ++v) {
    std::sort(adj[v].begin(), adj[v].end());
    net.offsets_[v + 1] = net.offsets_[v] + static_cast<int>(adj[v].size());
    net.adjacency_.insert(net.adjacency_.end(), adj[v].begin(), adj[v].end());
  }
  return net;
}

Network Network::from_edge_list(std::istream& in) {
  std::map<int, std::vector<int>> adj;
  int u, v;
  int max_v = -1;
  while (in >> u >> v) {
    if (u < 0 || v < 0 || u == v)
      throw std::invalid_argument("network: bad edge in edge list");
    adj[u].push_back(v);
    adj[v].push_back(u);
    max_v = std::max({max_v, u, v});
  }
  if (max_v < 0) throw std::invalid_argument("network: empty edge list");
  Network net;
  const int n = max_v + 1;
  net.offsets_.assign(n + 1, 0);
  for (int w = 0; w < n; ++w) {
    auto it = adj.find(w);
    if (it != adj.end()) {
      auto& list = it->second;
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
      net.offsets_[w + 1] = net.offsets_[w] + static_cast<int>(list.size());
      net.adjacency_.insert(net.adjacency_.end(), list.begin(), list.end());
    } else {
      net.offsets_[w + 1] = net.offsets_[w];
    }
  }
  return net;
}

int Network::up_of(int v) const {
  if (!has_grid_coords() || row_of(v) + 1 >= rows_) return -1;
  return v + cols_;
}
int Network::down_of(int v) const {
  if (!has_grid_coords() || row_of(v) - 1 < 0) return -1;
  return v - cols_;
}
int Network::right_of(int v) const {
  if (!has_grid_coords() || col_of(v) + 1 >= cols_) return -1;
  return v + 1;
}
int Network::left_of(int v) const {
  if (!has_grid_coords() || col_of(v) - 1 < 0) return -1;
  return v - 1;
}

bool SisState::contains(int v) const {
  return std::binary_search(infected.begin(), infected.end(),
                            static_cast<std::uint16_t>(v));
}

void SisState::add(int v) {
  const auto it = std::lower_bound(infected.begin(), infected.end(),
                                   static_cast<std::uint16_t>(v));
  infected.insert(it, static_cast<std::uint16_t>(v));
}

void SisState::remove(int v) {
  const auto it = std::lower_bound(infected.begin(), infected.end(),
                                   static_cast<std::uint16_t>(v));
  infected.erase(it);
}

SisModel::SisModel(const SisParams& params, const Network& net, SisState observed)
    : params_(params), net_(net), observed_(std::move(observed)) {
  params_.validate(net_.size());
  if (observed_.empty())
    throw std::invalid_argument("sis: observed configuration must be nonempty");
}

double SisModel::com_weight(int v, const SisState& others) const {
  if (!net_.has_grid_coords()) return 1.0;  // no directional structure
  const int up = net_.up_of(v), down = net_.down_of(v);
  const int right = net_.right_of(v), left = net_.left_of(v);
  const int ju = (up >= 0 && others.contains(up)) ? 1 : 0;
  const int jd = (down >= 0 && others.contains(down)) ? 1 : 0;
  const int jr = (right >= 0 && others.contains(right)) ? 1 : 0;
  const int jl = (left >= 0 && others.contains(left)) ? 1 : 0;
  if (ju == 0 && jd == 0 && jr == 0 && jl == 0) return 1.0;
  double sum_r = 0.0, sum_c = 0.0;
  int m = 0;
  for (int u : others.infected) {
    if (u == v) continue;  // v's own label is ignored
    sum_r += net_.row_of(u);
    sum_c += net_.col_of(u);
    ++m;
  }
  if (m == 0) return 1.0;
  const double mean_r = sum_r / m;
  const double mean_c = sum_c / m;
  auto dir = [](double coord, double mean) {
    if (std::abs(coord - mean) <= 1e-9) return 0;
    return coord < mean ? 1 : -1;
  };
  const int d_ud = dir(net_.row_of(v), mean_r);
  const int d_lr = dir(net_.col_of(v), mean_c);
  const int expo = -(ju - jd) * d_ud - (jr - jl) * d_lr;
  return std::exp2(static_cast<double>(expo));
}

std::pair<double, double> SisModel::csd(int v, const SisState& others) const {
  int n_inf = 0;
  for (int u : net_.neighbors(v))
    if (u != v && others.contains(u)) ++n_inf;
  const double denom = params_.alpha * n_inf + params_.beta + params_.epsilon;
  const double pj = (params_.alpha * n_inf + params_.epsilon) / denom * com_weight(v, others);
  const double ps = params_.beta / denom;
  return {pj / (pj + ps), ps / (pj + ps)};
}

double SisModel::total_rate(const SisState& x, int cut_edges) const {
  if (x.empty()) return params_.gamma;
  return params_.beta * x.count() + params_.alpha * cut_edges;
}

double SisModel::forward_jump_prob(const SisState& x, const SisState& y) const {
  // entry move from the empty state
  if (x.empty()) {
    if (y.count() != 1) return 0.0;
    return 1.0 / net_.size();
  }
  // otherwise a single-vertex flip
  const int dc = y.count() - x.count();
  if (dc != 1 && dc != -1) return 0.0;
  int flip = -1;
  {
    size_t i = 0, j = 0;
    int diff = 0;
    while (i < x.infected.size() || j < y.infected.size()) {
      if (i < x.infected.size() && j < y.infected.size() &&
          x.infected[i] == y.infected[j]) {
        ++i;
        ++j;
        continue;
      }
      if (j >= y.infected.size() ||
          (i < x.infected.size() && x.infected[i] < y.infected[j])) {
        flip = x.infected[i++];
      } else {
        flip = y.infected[j++];
      }
      if (++diff > 1) return 0.0;
    }
    if (diff != 1) return 0.0;
  }
  int cut = 0;
  for (int u : x.infected)
    for (int w : net_.neighbors(u))
      if (!x.contains(w)) ++cut;
  double rate;
  if (dc == 1) {  // v gets infected
    int n_inf = 0;
    for (int u : net_.neighbors(flip))
      if (x.contains(u)) ++n_inf;
    if (n_inf == 0) return 0.0;
    rate = params_.alpha * n_inf;
  } else {  // v is cured
    rate = params_.beta;
  }
  return rate / total_rate(x, cut);
}

int SisModel::build_candidates(const SisState& y, std::vector<RawCandidate>& out,
                               double& total) const {
  const int nv = net_.size();
  out.clear();
  total = 0.0;

  // per-vertex infected-neighbour counts and the S-J cut of y
  std::vector<int> n_inf(nv, 0);
  for (int u : y.infected)
    for (int w : net_.neighbors(u)) ++n_inf[w];
  int cut_y = 0;
  for (int u : y.infected) cut_y += net_.degree(u) - n_inf[u];

  // if y differs from the observed configuration at exactly one vertex, the
  // flip there would re-enter T and is excluded (first-hitting constraint)
  int excluded = -1;
  {
    size_t i = 0, j = 0;
    int diff_count = 0, diff_vertex = -1;
    const auto& a = y.infected;
    const auto& b = observed_.infected;
    while ((i < a.size() || j < b.size()) && diff_count <= 1) {
      if (i < a.size() && j < b.size() && a[i] == b[j]) {
        ++i;
        ++j;
      } else if (j >= b.size() || (i < a.size() && a[i] < b[j])) {
        diff_vertex = a[i++];
        ++diff_count;
      } else {
        diff_vertex = b[j++];
        ++diff_count;
      }
    }
    if (diff_count == 1) excluded = diff_vertex;
  }

  const double beta = params_.beta;
  const double alpha = params_.alpha;
  const double eps = params_.epsilon;

  // centre-of-mass sums over y's infected set
  double sum_r = 0.0, sum_c = 0.0;
  const bool grid = net_.has_grid_coords();
  if (grid) {
    for (int u : y.infected) {
      sum_r += net_.row_of(u);
      sum_c += net_.col_of(u);
    }
  }

  auto com_factor = [&](int v, bool v_in_y) -> double {
    if (!grid) return 1.0;
    const int up = net_.up_of(v), down = net_.down_of(v);
    const int right = net_.right_of(v), left = net_.left_of(v);
    const int ju = (up >= 0 && y.contains(up)) ? 1 : 0;
    const int jd = (down >= 0 && y.contains(down)) ? 1 : 0;
    const int jr = (right >= 0 && y.contains(right)) ? 1 : 0;
    const int jl = (left >= 0 && y.contains(left)) ? 1 : 0;
    if (ju == 0 && jd == 0 && jr == 0 && jl == 0) return 1.0;
    double sr = sum_r, sc = sum_c;
    int m = y.count();
    if (v_in_y) {
      sr -= net_.row_of(v);
      sc -= net_.col_of(v);
      --m;
    }
    if (m == 0) return 1.0;
    auto dir = [](double coord, double mean) {
      if (std::abs(coord - mean) <= 1e-9) return 0;
      return coord < mean ? 1 : -1;
    };
    const int d_ud = dir(net_.row_of(v), sr / m);
    const int d_lr = dir(net_.col_of(v), sc / m);
    return std::exp2(static_cast<double>(-(ju - jd) * d_ud - (jr - jl) * d_lr));
  };

  for (int v = 0; v < nv; ++v) {
    if (v == excluded) continue;
    const bool infected = y.contains(v);
    const int ni = n_inf[v];  // infected neighbours of v, unchanged by the flip
    if (infected) {
      // predecessor x = y \ {v}; forward move infects (or enters) v
      double fwd;
      if (y.count() == 1) {
        fwd = 1.0 / nv;  // entry move from the empty state
      } else {
        if (ni == 0) continue;  // no forward infection path
        const int cut_x = cut_y + 2 * ni - net_.degree(v);
        fwd = alpha * ni / (beta * (y.count() - 1) + alpha * cut_x);
      }
      // CSD ratio pi(S|z) / pi(J|z) for the flipped vertex
      const double ratio = beta / ((alpha * ni + eps) * com_factor(v, true));
      const double w = ratio * fwd;
      out.push_back({v, true, fwd, w});
      total += w;
    } else {
      // predecessor x = y + {v}; forward move cures v
      const int cut_x = cut_y + net_.degree(v) - 2 * ni;
      const double fwd = beta / (beta * (y.count() + 1) + alpha * cut_x);
      const double ratio = (alpha * ni + eps) * com_factor(v, false) / beta;
      const double w = ratio * fwd;
      out.push_back({v, false, fwd, w});
      total += w;
    }
  }
  return static_cast<int>(out.size());
}

std::optional<ReverseStep<SisState>> SisModel::reverse_propose(const SisState& y,
                                                               SplitMix64& rng) const {
  thread_local std::vector<RawCandidate> cand;
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
  SisState x = y;
  if (cand[pick].removes)
    x.remove(cand[pick].vertex);
  else
    x.add(cand[pick].vertex);
  const double log_incr =
      std::log(cand[pick].forward_prob) + std::log(total) - std::log(cand[pick].weight);
  return ReverseStep<SisState>{std::move(x), log_incr};
}

std::vector<SisModel::ReverseCandidate> SisModel::enumerate_reverse(const SisState& y) const {
  std::vector<RawCandidate> cand;
  double total = 0.0;
  const int n = build_candidates(y, cand, total);
  std::vector<ReverseCandidate> out;
  out.reserve(n);
  for (int c = 0; c < n; ++c) {
    SisState x = y;
    if (cand[c].removes)
      x.remove(cand[c].vertex);
    else
      x.add(cand[c].vertex);
    const double q = cand[c].weight / total;
    out.push_back({cand[c].vertex, std::move(x), cand[c].forward_prob, q,
                   std::log(cand[c].forward_prob) - std::log(q)});
  }
  return out;
}

EpidemicDraw simulate_forward_epidemic(const SisParams& params, const Network& net,
                                       std::uint64_t seed) {
  params.validate(net.size());
  SplitMix64 rng(mix_seed(seed, 0x65706964ULL));
  const int nv = net.size();
  // detection conditions on a rare forward event (about 3e-7 per entry at the
  // default rates), so the restart budget has to be generous
  for (long attempt = 0; attempt < 100000000; ++attempt) {
    const int source = static_cast<int>(rng.uniform_int(nv));
    SisState state;
    state.add(source);
    while (!state.empty() && state.count() < params.detection_size) {
      // collect cure and infection moves with their rates
      thread_local std::vector<std::pair<int, double>> infections;
      infections.clear();
      double infection_rate = 0.0;
      for (int u : state.infected) {
        for (int w : net.neighbors(u)) {
          if (state.contains(w)) continue;
          bool seen = false;
          for (auto& [vv, rr] : infections) {
            if (vv == w) {
              rr += params.alpha;
              seen = true;
              break;
            }
          }
          if (!seen) infections.emplace_back(w, params.alpha);
          infection_rate += params.alpha;
        }
      }
      const double cure_rate = params.beta * state.count();
      const double total = cure_rate + infection_rate;
      double u = rng.uniform01() * total;
      if (u < cure_rate) {
        const int idx = static_cast<int>(u / params.beta);
        state.remove(state.infected[std::min(idx, state.count() - 1)]);
      } else {
        u -= cure_rate;
        int chosen = infections.back().first;
        for (const auto& [vv, rr] : infections) {
          if (u < rr) {
            chosen = vv;
            break;
          }
          u -= rr;
        }
        state.add(chosen);
      }
    }
    if (state.count() == params.detection_size) return {std::move(state), source};
  }
  throw std::runtime_error(
      "simulate_forward_epidemic: no detection in 1e8 attempts; parameters subcritical");
}

std::vector<double> likelihood_surface(const Ensemble<SisState>& ens, int n_vertices) {
  double m = kNegInf;
  for (const auto& p : ens.particles)
    if (p.alive() && p.finished) m = std::max(m, p.log_weight);
  if (m == kNegInf) throw DegeneracyError("likelihood_surface: zero total weight");
  std::vector<double> surface(n_vertices, 0.0);
  double total = 0.0;
  for (const auto& p : ens.particles) {
    if (!p.alive() || !p.finished) continue;
    const auto& st = p.trajectory.states;
    if (st.size() < 2 || st[st.size() - 2].count() != 1)
      throw std::logic_error("likelihood_surface: penultimate state is not a singleton");
    const double w = std::exp(p.log_weight - m);
    surface[st[st.size() - 2].infected[0]] += w;
    total += w;
  }
  for (double& s : surface) s /= total;
  return surface;
}

std::vector<int> surface_argmax(const std::vector<double>& surface) {
  double best = -1.0;
  for (double v : surface) best = std::max(best, v);
  std::vector<int> out;
  for (int v = 0; v < static_cast<int>(surface.size()); ++v)
    if (surface[v] == best) out.push_back(v);
  return out;
}

}  // namespace revsmc
