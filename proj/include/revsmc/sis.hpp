#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "revsmc/engine.hpp"
#include "revsmc/rng.hpp"

namespace revsmc {

struct SisParams {
  double alpha = 1.0;       // per-edge infection rate
  double beta = 12.0;       // cure rate
  double gamma = 1.0;       // entry rate into the empty population
  double epsilon = 1e-4;    // reverse-infection regulariser
  int detection_size = 10;  // M

  void validate(int n_vertices) const;
};

// Undirected network; the bundled builder is the 4-nearest-neighbour grid.
// Arbitrary graphs can be loaded from an edge list ("u v" per line), in which
// case the directional centre-of-mass weights degrade to w == 1 since up/down
// and left/right are grid notions.
class Network {
 public:
  static Network grid(int rows, int cols);
  static Network from_edge_list(std::istream& in);

  int size() const { return static_cast<int>(offsets_.size()) - 1; }
  std::span<const int> neighbors(int v) const {
    return std::span<const int>(adjacency_.data() + offsets_[v],
                                adjacency_.data() + offsets_[v + 1]);
  }
  int degree(int v) const { return offsets_[v + 1] - offsets_[v]; }

  bool has_grid_coords() const { return rows_ > 0; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int row_of(int v) const { return v / cols_; }
  int col_of(int v) const { return v % cols_; }
  int vertex_at(int r, int c) const { return r * cols_ + c; }
  // directional neighbours; -1 when off the grid or not a grid network
  int up_of(int v) const;
  int down_of(int v) const;
  int left_of(int v) const;
  int right_of(int v) const;

 private:
  std::vector<int> offsets_;
  std::vector<int> adjacency_;
  int rows_ = 0;
  int cols_ = 0;
};

// Set of infected vertices, kept sorted.
struct SisState {
  std::vector<std::uint16_t> infected;

  bool operator==(const SisState&) const = default;
  int count() const { return static_cast<int>(infected.size()); }
  bool empty() const { return infected.empty(); }
  bool contains(int v) const;
  void add(int v);
  void remove(int v);
};

class SisModel {
 public:
  using State = SisState;

  SisModel(const SisParams& params, const Network& net, SisState observed);

  const SisParams& params() const { return params_; }
  const Network& network() const { return net_; }
  const SisState& observed() const { return observed_; }

  bool is_initial(const SisState& s) const { return s.empty(); }
  bool is_target(const SisState& s) const { return s == observed_; }
  double initial_log_density(const SisState&) const { return 0.0; }  // mu({empty}) = 1
  SisState terminal_sample(SplitMix64&) const { return observed_; }
  double terminal_log_density(const SisState&) const { return 0.0; }
  int state_level(const SisState& s) const { return s.count(); }

  std::optional<ReverseStep<SisState>> reverse_propose(const SisState& y,
                                                       SplitMix64& rng) const;

  // jump-skeleton probability of the single-flip (or entry) move x -> y
  double forward_jump_prob(const SisState& x, const SisState& y) const;

  // centre-of-mass weight w(v) given the labels of all other vertices;
  // `others` is read with v's own label ignored
  double com_weight(int v, const SisState& others) const;
  // normalised CSD (prob_J, prob_S) of vertex v given the other labels
  std::pair<double, double> csd(int v, const SisState& others) const;

  struct ReverseCandidate {
    int flip_vertex;
    SisState x;
    double forward_prob;
    double proposal_prob;  // normalised
    double log_increment;
  };
  std::vector<ReverseCandidate> enumerate_reverse(const SisState& y) const;

 private:
  struct RawCandidate {
    int vertex;
    bool removes;  // x = y minus v (forward infection / entry of v)
    double forward_prob;
    double weight;
  };
  int build_candidates(const SisState& y, std::vector<RawCandidate>& out,
                       double& total) const;
  double total_rate(const SisState& x, int cut_edges) const;

  SisParams params_;
  Network net_;
  SisState observed_;
};

// Forward jump-chain simulation from the empty state until the infection
// first reaches M vertices, restarting when it dies out beforehand. Returns
// the detected configuration and the entry vertex of the successful episode.
struct EpidemicDraw {
  SisState observed;
  int source;
};
EpidemicDraw simulate_forward_epidemic(const SisParams& params, const Network& net,
                                       std::uint64_t seed);

// Self-normalised source posterior over vertices: weighted fraction of
// particles whose state just before the empty set was {v}.
std::vector<double> likelihood_surface(const Ensemble<SisState>& ens, int n_vertices);

// All maximisers of the surface (ties reported in vertex order).
std::vector<int> surface_argmax(const std::vector<double>& surface);

}  // namespace revsmc
