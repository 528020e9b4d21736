#include "revsmc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace revsmc {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& section, const std::string& key,
                    const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: [" + section + "] " + key + ": not a number: '" + value + "'");
  }
}

long parse_long(const std::string& section, const std::string& key,
                const std::string& value) {
  try {
    size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: [" + section + "] " + key + ": not an integer: '" + value +
                      "'");
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// terminal interval pairs: "2:2.1; 3:3.1; ..."
std::vector<std::pair<double, double>> parse_sweep(const std::string& value) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    const size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("config: [hyperbolic] sweep: expected 'lt:ut' pairs, got '" + item +
                        "'");
    out.emplace_back(parse_double("hyperbolic", "sweep", trim(item.substr(0, colon))),
                     parse_double("hyperbolic", "sweep", trim(item.substr(colon + 1))));
  }
  if (out.empty()) throw ConfigError("config: [hyperbolic] sweep: no intervals given");
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  cfg.splitting.particles = 0;  // inherit the top-level particle count unless set
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (section.empty()) {
      if (key == "experiment")
        cfg.experiment = value;
      else if (key == "seed")
        cfg.seed = static_cast<std::uint64_t>(parse_long(section, key, value));
      else if (key == "particles")
        cfg.particles = static_cast<int>(parse_long(section, key, value));
      else if (key == "replicates")
        cfg.replicates = static_cast<int>(parse_long(section, key, value));
      else if (key == "jobs")
        cfg.jobs = static_cast<int>(parse_long(section, key, value));
      else if (key == "output")
        cfg.output = value;
      else
        throw ConfigError("config: unknown top-level key '" + key + "'");
    } else if (section == "atm") {
      if (key == "sources" || key == "K")
        cfg.atm.sources = static_cast<int>(parse_long(section, key, value));
      else if (key == "barrier" || key == "b")
        cfg.atm.barrier = static_cast<int>(parse_long(section, key, value));
      else if (key == "lambda")
        cfg.atm.lambda = parse_double(section, key, value);
      else if (key == "mu")
        cfg.atm.mu = parse_double(section, key, value);
      else if (key == "alpha0")
        cfg.atm.alpha0 = parse_double(section, key, value);
      else if (key == "alpha1")
        cfg.atm.alpha1 = parse_double(section, key, value);
      else
        throw ConfigError("config: unknown key '" + key + "' in [atm]");
    } else if (section == "hyperbolic") {
      if (key == "l0")
        cfg.hyperbolic.l0 = parse_double(section, key, value);
      else if (key == "u0")
        cfg.hyperbolic.u0 = parse_double(section, key, value);
      else if (key == "lt")
        cfg.hyperbolic.lt = parse_double(section, key, value);
      else if (key == "ut")
        cfg.hyperbolic.ut = parse_double(section, key, value);
      else if (key == "t")
        cfg.hyperbolic.t = parse_double(section, key, value);
      else if (key == "delta")
        cfg.hyperbolic.delta = parse_double(section, key, value);
      else if (key == "sweep")
        cfg.sweep = parse_sweep(value);
      else
        throw ConfigError("config: unknown key '" + key + "' in [hyperbolic]");
    } else if (section == "sis") {
      if (key == "rows")
        cfg.sis.rows = static_cast<int>(parse_long(section, key, value));
      else if (key == "cols")
        cfg.sis.cols = static_cast<int>(parse_long(section, key, value));
      else if (key == "alpha")
        cfg.sis.params.alpha = parse_double(section, key, value);
      else if (key == "beta")
        cfg.sis.params.beta = parse_double(section, key, value);
      else if (key == "gamma")
        cfg.sis.params.gamma = parse_double(section, key, value);
      else if (key == "epsilon")
        cfg.sis.params.epsilon = parse_double(section, key, value);
      else if (key == "M" || key == "detection_size")
        cfg.sis.params.detection_size = static_cast<int>(parse_long(section, key, value));
      else if (key == "observed_file")
        cfg.sis.observed_file = value;
      else if (key == "edge_list")
        cfg.sis.edge_list_file = value;
      else
        throw ConfigError("config: unknown key '" + key + "' in [sis]");
    } else if (section == "splitting") {
      if (key == "particles")
        cfg.splitting.particles = static_cast<int>(parse_long(section, key, value));
      else if (key == "kill_count")
        cfg.splitting.kill_count = static_cast<int>(parse_long(section, key, value));
      else if (key == "mcmc_steps")
        cfg.splitting.mcmc_steps = static_cast<int>(parse_long(section, key, value));
      else if (key == "max_iterations")
        cfg.splitting.max_iterations = parse_long(section, key, value);
      else if (key == "initial_conditions")
        cfg.splitting_initials = static_cast<int>(parse_long(section, key, value));
      else
        throw ConfigError("config: unknown key '" + key + "' in [splitting]");
    } else if (section == "smc") {
      if (key == "ess_threshold")
        cfg.smc.ess_threshold = parse_double(section, key, value);
      else if (key == "step_cap")
        cfg.smc.step_cap = static_cast<std::uint64_t>(parse_long(section, key, value));
      else if (key == "resampling") {
        if (value == "multinomial")
          cfg.smc.scheme = ResampleScheme::Multinomial;
        else if (value == "systematic")
          cfg.smc.scheme = ResampleScheme::Systematic;
        else
          throw ConfigError("config: [smc] resampling must be multinomial or systematic");
      } else if (key == "threads")
        cfg.smc.threads = static_cast<int>(parse_long(section, key, value));
      else
        throw ConfigError("config: unknown key '" + key + "' in [smc]");
    } else {
      throw ConfigError("config: unknown section [" + section + "]");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void ExperimentConfig::validate() const {
  static const char* known[] = {"atm",         "atm-large",    "hyperbolic",
                                "hyperbolic-sweep", "sis",     "sis-surface",
                                "atm-splitting", "hyperbolic-splitting"};
  bool ok = false;
  for (const char* k : known) ok |= (experiment == k);
  if (!ok)
    throw ConfigError("config: experiment must be one of atm, atm-large, hyperbolic, "
                      "hyperbolic-sweep, sis, sis-surface, atm-splitting, "
                      "hyperbolic-splitting; got '" + experiment + "'");
  if (replicates < 1) throw ConfigError("config: replicates must be >= 1");
  if (particles < 1) throw ConfigError("config: particles must be >= 1");
  if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
  if (!(smc.ess_threshold >= 0.0 && smc.ess_threshold <= 1.0))
    throw ConfigError("config: [smc] ess_threshold must lie in [0, 1]");
  try {
    if (experiment == "atm" || experiment == "atm-large" || experiment == "atm-splitting")
      atm.validate();
    if (experiment == "hyperbolic" || experiment == "hyperbolic-sweep" ||
        experiment == "hyperbolic-splitting")
      hyperbolic.validate();
    if (experiment == "hyperbolic-sweep") {
      if (sweep.empty())
        throw std::invalid_argument("hyperbolic-sweep requires [hyperbolic] sweep");
      for (const auto& [lt, ut] : sweep) {
        StripParams p = hyperbolic;
        p.lt = lt;
        p.ut = ut;
        p.validate();
      }
    }
    if (experiment == "sis" || experiment == "sis-surface") {
      if (sis.edge_list_file.empty()) {
        if (sis.rows < 1 || sis.cols < 1)
          throw std::invalid_argument("sis grid dims must be >= 1");
        sis.params.validate(sis.rows * sis.cols);
      }
    }
    if (experiment == "atm-splitting" || experiment == "hyperbolic-splitting") {
      resolved_splitting().validate();
      if (experiment == "hyperbolic-splitting" && splitting_initials < 1)
        throw std::invalid_argument("hyperbolic-splitting needs initial_conditions >= 1");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

SplittingConfig ExperimentConfig::resolved_splitting() const {
  SplittingConfig sc = splitting;
  if (sc.particles == 0) sc.particles = particles;
  return sc;
}

std::uint64_t replicate_seed(std::uint64_t master, int replicate,
                             const std::string& experiment) {
  return master ^ mix_seed(fnv1a64(experiment.c_str()), 0x7265706cULL,
                           static_cast<std::uint64_t>(replicate) + 1);
}

namespace {

struct LockedSink : EventSink {
  EventSink* inner;
  std::mutex mtx;
  explicit LockedSink(EventSink* s) : inner(s) {}
  void level_crossed(int level, double e, bool r) override {
    std::lock_guard<std::mutex> g(mtx);
    inner->level_crossed(level, e, r);
  }
  void particle_zeroed(int slot, const std::string& reason) override {
    std::lock_guard<std::mutex> g(mtx);
    inner->particle_zeroed(slot, reason);
  }
  void degeneracy(const std::string& where) override {
    std::lock_guard<std::mutex> g(mtx);
    inner->degeneracy(where);
  }
  void splitting_level(long it, double level) override {
    std::lock_guard<std::mutex> g(mtx);
    inner->splitting_level(it, level);
  }
};

double min_ess(const RunDiagnostics& d) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : d.ess_trace) m = std::min(m, e.ess);
  return std::isfinite(m) ? m : std::numeric_limits<double>::quiet_NaN();
}

// delta-method split of the idealised splitting standard error across
// terminal on-counts
double idealised_terminal_se(const AmsResult& res, int k, int n_particles) {
  const double p = res.estimate;
  const double pk = res.per_terminal[k];
  if (p <= 0.0 || pk <= 0.0) return 0.0;
  const double fk = pk / p;
  const double rel2 = -std::log(p) / n_particles + (1.0 - fk) / (fk * n_particles);
  return pk * std::sqrt(std::max(rel2, 0.0));
}

std::string grid_coord(const Network& net, int v) {
  if (!net.has_grid_coords()) return "v" + std::to_string(v);
  return "(" + std::to_string(net.row_of(v)) + " " + std::to_string(net.col_of(v)) + ")";
}

SisState load_observed(const std::string& path, const Network& net) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: [sis] observed_file: cannot open '" + path + "'");
  SisState state;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ls(line);
    int a, b;
    if (ls >> a) {
      if (ls >> b) {
        if (!net.has_grid_coords())
          throw ConfigError("config: observed_file has 'r c' rows but the network is not "
                            "a grid; use vertex ids");
        if (a < 0 || a >= net.rows() || b < 0 || b >= net.cols())
          throw ConfigError("config: observed_file vertex off the grid");
        state.add(net.vertex_at(a, b));
      } else {
        if (a < 0 || a >= net.size())
          throw ConfigError("config: observed_file vertex id out of range");
        state.add(a);
      }
    }
  }
  if (state.empty()) throw ConfigError("config: observed_file holds no vertices");
  return state;
}

// one replicate of each experiment family; returns its rows
std::vector<ResultRow> run_replicate(const ExperimentConfig& cfg, int r, EventSink* sink) {
  const std::uint64_t seed = replicate_seed(cfg.seed, r, cfg.experiment);
  std::vector<ResultRow> rows;
  const auto wall0 = std::chrono::steady_clock::now();
  auto wall = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  };

  if (cfg.experiment == "atm" || cfg.experiment == "atm-large") {
    for (int k = 0; k <= cfg.atm.sources; ++k) {
      ResultRow row;
      row.experiment = cfg.experiment;
      row.replicate = r;
      row.condition = "k=" + std::to_string(k);
      row.seed = seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const AtmModel model(cfg.atm, k);
        const auto ens = run_reverse_smc(model, cfg.particles, mix_seed(seed, k + 1),
                                         cfg.smc, sink);
        const auto est = estimate_unconditional(ens, [](const auto&) { return 1.0; });
        row.estimate = est.estimate;
        row.std_error = est.std_error;
        row.ess_min = min_ess(ens.diagnostics);
        row.resample_count = ens.diagnostics.resample_events;
      } catch (const DegeneracyError&) {
        row.status = "degenerate";
      }
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back(std::move(row));
    }
  } else if (cfg.experiment == "hyperbolic" || cfg.experiment == "hyperbolic-sweep") {
    std::vector<std::pair<double, double>> terminals = cfg.sweep;
    if (cfg.experiment == "hyperbolic")
      terminals = {{cfg.hyperbolic.lt, cfg.hyperbolic.ut}};
    int idx = 0;
    for (const auto& [lt, ut] : terminals) {
      StripParams p = cfg.hyperbolic;
      p.lt = lt;
      p.ut = ut;
      ResultRow row;
      row.experiment = cfg.experiment;
      row.replicate = r;
      row.condition = "terminal=" + fmt_short(lt) + ":" + fmt_short(ut);
      row.seed = seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const HyperbolicModel model(p);
        const auto ens = run_reverse_smc(model, cfg.particles, mix_seed(seed, idx + 1),
                                         cfg.smc, sink);
        const auto est = estimate_unconditional(ens, [](const auto&) { return 1.0; });
        row.estimate = est.estimate;
        row.std_error = est.std_error;
        row.ess_min = min_ess(ens.diagnostics);
        row.resample_count = ens.diagnostics.resample_events;
      } catch (const DegeneracyError&) {
        row.status = "degenerate";
      }
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back(std::move(row));
      ++idx;
    }
  } else if (cfg.experiment == "sis" || cfg.experiment == "sis-surface") {
    Network net = cfg.sis.edge_list_file.empty()
                      ? Network::grid(cfg.sis.rows, cfg.sis.cols)
                      : [&] {
                          std::ifstream in(cfg.sis.edge_list_file);
                          if (!in)
                            throw ConfigError("config: cannot open edge list '" +
                                              cfg.sis.edge_list_file + "'");
                          return Network::from_edge_list(in);
                        }();
    SisParams params = cfg.sis.params;
    params.validate(net.size());
    SisState observed;
    int source = -1;
    if (!cfg.sis.observed_file.empty()) {
      observed = load_observed(cfg.sis.observed_file, net);
    } else {
      const EpidemicDraw draw = simulate_forward_epidemic(params, net, mix_seed(seed, 17));
      observed = draw.observed;
      source = draw.source;
    }
    ResultRow base;
    base.experiment = cfg.experiment;
    base.replicate = r;
    base.seed = seed;
    try {
      const SisModel model(params, net, observed);
      const auto ens =
          run_reverse_smc(model, cfg.particles, mix_seed(seed, 29), cfg.smc, sink);
      const auto surface = likelihood_surface(ens, net.size());
      const auto argmax = surface_argmax(surface);
      if (cfg.experiment == "sis-surface") {
        for (int v = 0; v < net.size(); ++v) {
          ResultRow row = base;
          row.condition = "v=" + grid_coord(net, v);
          row.estimate = surface[v];
          row.ess_min = min_ess(ens.diagnostics);
          row.resample_count = ens.diagnostics.resample_events;
          row.wall_seconds = wall();
          row.detail = observed.contains(v) ? "observed=1" : "observed=0";
          rows.push_back(std::move(row));
        }
      } else {
        ResultRow row = base;
        row.condition = "epidemic";
        row.estimate = surface[argmax.front()];
        row.ess_min = min_ess(ens.diagnostics);
        row.resample_count = ens.diagnostics.resample_events;
        std::string detail = "argmax=" + grid_coord(net, argmax.front());
        for (size_t i = 1; i < argmax.size(); ++i)
          detail += "|" + grid_coord(net, argmax[i]);
        if (source >= 0) {
          detail += ";source=" + grid_coord(net, source);
          if (net.has_grid_coords()) {
            int best = std::numeric_limits<int>::max();
            for (int v : argmax) {
              const int d = std::abs(net.row_of(v) - net.row_of(source)) +
                            std::abs(net.col_of(v) - net.col_of(source));
              best = std::min(best, d);
            }
            detail += ";manhattan=" + std::to_string(best);
          }
        }
        row.detail = std::move(detail);
        row.wall_seconds = wall();
        rows.push_back(std::move(row));
      }
    } catch (const DegeneracyError&) {
      ResultRow row = base;
      row.condition = cfg.experiment == "sis-surface" ? "v=all" : "epidemic";
      row.status = "degenerate";
      row.wall_seconds = wall();
      rows.push_back(std::move(row));
    }
  } else if (cfg.experiment == "atm-splitting") {
    const SplittingConfig sc = cfg.resolved_splitting();
    const AtmSplitting ams(cfg.atm, sc);
    try {
      const AmsResult res = ams.run(seed, sink);
      for (int k = 0; k <= cfg.atm.sources; ++k) {
        ResultRow row;
        row.experiment = cfg.experiment;
        row.replicate = r;
        row.condition = "k=" + std::to_string(k);
        row.seed = seed;
        row.estimate = res.per_terminal[k];
        row.std_error = idealised_terminal_se(res, k, sc.particles);
        row.ess_min = std::numeric_limits<double>::quiet_NaN();
        row.resample_count = res.iterations;
        row.wall_seconds = wall();
        row.detail = "total=" + fmt_short(res.estimate);
        rows.push_back(std::move(row));
      }
    } catch (const StagnationError&) {
      ResultRow row;
      row.experiment = cfg.experiment;
      row.replicate = r;
      row.condition = "all";
      row.seed = seed;
      row.status = "stagnated";
      row.ess_min = std::numeric_limits<double>::quiet_NaN();
      row.wall_seconds = wall();
      rows.push_back(std::move(row));
    }
  } else if (cfg.experiment == "hyperbolic-splitting") {
    const SplittingConfig sc = cfg.resolved_splitting();
    const DiffusionSplitting ams(cfg.hyperbolic, sc);
    ResultRow row;
    row.experiment = cfg.experiment;
    row.replicate = r;
    row.condition = "terminal=" + fmt_short(cfg.hyperbolic.lt) + ":" +
                    fmt_short(cfg.hyperbolic.ut);
    row.seed = seed;
    try {
      const AmsResult res = ams.run(cfg.splitting_initials, seed, sink);
      row.estimate = res.estimate;
      row.std_error = res.std_error;
      row.ess_min = std::numeric_limits<double>::quiet_NaN();
      row.resample_count = res.iterations;
    } catch (const StagnationError&) {
      row.status = "stagnated";
      row.ess_min = std::numeric_limits<double>::quiet_NaN();
    }
    row.wall_seconds = wall();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, EventSink* sink) {
  cfg.validate();
  LockedSink locked(sink != nullptr ? sink : &null_sink());
  std::vector<std::vector<ResultRow>> buckets(cfg.replicates);
  if (cfg.jobs <= 1) {
    for (int r = 0; r < cfg.replicates; ++r) buckets[r] = run_replicate(cfg, r, &locked);
  } else {
    std::vector<std::thread> pool;
    std::mutex next_mtx;
    int next = 0;
    std::exception_ptr error;
    std::mutex error_mtx;
    const int nt = std::min(cfg.jobs, cfg.replicates);
    for (int t = 0; t < nt; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          int r;
          {
            std::lock_guard<std::mutex> g(next_mtx);
            if (next >= cfg.replicates) return;
            r = next++;
          }
          try {
            buckets[r] = run_replicate(cfg, r, &locked);
          } catch (...) {
            std::lock_guard<std::mutex> g(error_mtx);
            if (!error) error = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }
  std::vector<ResultRow> rows;
  for (auto& b : buckets)
    for (auto& row : b) rows.push_back(std::move(row));
  return rows;
}

std::string format_row(const ResultRow& row) {
  std::string out;
  out += row.experiment;
  out += ',';
  out += std::to_string(row.replicate);
  out += ',';
  out += row.condition;
  out += ',';
  out += fmt_double(row.estimate);
  out += ',';
  out += fmt_double(row.std_error);
  out += ',';
  out += fmt_double(row.ess_min);
  out += ',';
  out += std::to_string(row.resample_count);
  out += ',';
  out += fmt_double(row.wall_seconds);
  out += ',';
  out += std::to_string(row.seed);
  out += ',';
  out += row.status;
  out += ',';
  out += row.detail;
  return out;
}

void write_results(std::ostream& out, const ExperimentConfig& cfg,
                   const std::vector<ResultRow>& rows) {
  nlohmann::json meta;
  meta["experiment"] = cfg.experiment;
  meta["seed"] = cfg.seed;
  meta["particles"] = cfg.particles;
  meta["replicates"] = cfg.replicates;
  if (cfg.experiment.rfind("atm", 0) == 0) {
    meta["atm"] = {{"sources", cfg.atm.sources}, {"barrier", cfg.atm.barrier},
                   {"lambda", cfg.atm.lambda},   {"mu", cfg.atm.mu},
                   {"alpha0", cfg.atm.alpha0},   {"alpha1", cfg.atm.alpha1}};
  }
  if (cfg.experiment.rfind("hyperbolic", 0) == 0) {
    meta["hyperbolic"] = {{"l0", cfg.hyperbolic.l0}, {"u0", cfg.hyperbolic.u0},
                          {"lt", cfg.hyperbolic.lt}, {"ut", cfg.hyperbolic.ut},
                          {"t", cfg.hyperbolic.t},   {"delta", cfg.hyperbolic.delta}};
    if (!cfg.sweep.empty()) {
      auto arr = nlohmann::json::array();
      for (const auto& [lt, ut] : cfg.sweep) arr.push_back({lt, ut});
      meta["hyperbolic"]["sweep"] = arr;
    }
  }
  if (cfg.experiment.rfind("sis", 0) == 0) {
    meta["sis"] = {{"rows", cfg.sis.rows},
                   {"cols", cfg.sis.cols},
                   {"alpha", cfg.sis.params.alpha},
                   {"beta", cfg.sis.params.beta},
                   {"gamma", cfg.sis.params.gamma},
                   {"epsilon", cfg.sis.params.epsilon},
                   {"detection_size", cfg.sis.params.detection_size}};
    if (!cfg.sis.observed_file.empty()) meta["sis"]["observed_file"] = cfg.sis.observed_file;
    if (!cfg.sis.edge_list_file.empty()) meta["sis"]["edge_list"] = cfg.sis.edge_list_file;
  }
  if (cfg.experiment.find("splitting") != std::string::npos) {
    meta["splitting"] = {{"particles", cfg.splitting.particles},
                         {"kill_count", cfg.splitting.kill_count},
                         {"mcmc_steps", cfg.splitting.mcmc_steps},
                         {"max_iterations", cfg.splitting.max_iterations}};
    if (cfg.experiment == "hyperbolic-splitting")
      meta["splitting"]["initial_conditions"] = cfg.splitting_initials;
  }
  out << "# " << meta.dump() << "\n";
  out << "experiment,replicate,condition,estimate,std_error,ess_min,resample_count,"
         "wall_seconds,seed,status,detail\n";
  for (const auto& row : rows) out << format_row(row) << "\n";
}

std::vector<ResultRow> read_results_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("summarize: cannot open '" + path + "'");
  std::vector<ResultRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() < 10) throw ConfigError("summarize: malformed row in '" + path + "'");
    ResultRow row;
    row.experiment = f[0];
    row.replicate = static_cast<int>(std::stol(f[1]));
    row.condition = f[2];
    row.estimate = std::stod(f[3]);
    row.std_error = std::stod(f[4]);
    row.ess_min = std::stod(f[5]);
    row.resample_count = std::stol(f[6]);
    row.wall_seconds = std::stod(f[7]);
    row.seed = static_cast<std::uint64_t>(std::stoull(f[8]));
    row.status = f[9];
    row.detail = f.size() > 10 ? f[10] : "";
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {
double quantile_type7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}
}  // namespace

std::vector<SummaryRow> summarize_rows(const std::vector<ResultRow>& rows) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& row : rows) {
    const auto key = std::make_pair(row.experiment, row.condition);
    if (groups.find(key) == groups.end()) order.push_back(key);
    groups[key].push_back(row.estimate);
  }
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const auto& v = groups[key];
    SummaryRow s;
    s.experiment = key.first;
    s.condition = key.second;
    s.count = static_cast<long>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    s.mean = mean;
    s.sd = v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0;
    s.min = quantile_type7(v, 0.0);
    s.q25 = quantile_type7(v, 0.25);
    s.median = quantile_type7(v, 0.5);
    s.q75 = quantile_type7(v, 0.75);
    s.max = quantile_type7(v, 1.0);
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "experiment,condition,count,mean,sd,min,q25,median,q75,max\n";
  for (const auto& s : rows) {
    out << s.experiment << ',' << s.condition << ',' << s.count << ',' << fmt_double(s.mean)
        << ',' << fmt_double(s.sd) << ',' << fmt_double(s.min) << ',' << fmt_double(s.q25)
        << ',' << fmt_double(s.median) << ',' << fmt_double(s.q75) << ','
        << fmt_double(s.max) << "\n";
  }
}

}  // namespace revsmc
