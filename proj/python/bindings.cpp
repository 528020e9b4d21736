#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "revsmc/experiments.hpp"
#include "revsmc/green.hpp"
#include "revsmc/special.hpp"

namespace py = pybind11;
using namespace revsmc;

namespace {

py::dict summary_dict(const EstimateSummary& s) {
  py::dict d;
  d["estimate"] = s.estimate;
  d["std_error"] = s.std_error;
  d["resample_events"] = s.resample_events;
  d["elapsed_seconds"] = s.elapsed_seconds;
  py::list trace;
  for (const auto& e : s.ess_trace) trace.append(py::make_tuple(e.level, e.ess));
  d["ess_trace"] = trace;
  return d;
}

SmcOptions make_options(double ess_threshold, std::uint64_t step_cap, int threads) {
  SmcOptions opts;
  opts.ess_threshold = ess_threshold;
  opts.step_cap = step_cap;
  opts.threads = threads;
  return opts;
}

}  // namespace

PYBIND11_MODULE(revsmc, m) {
  m.doc() = "reverse-time multilevel SMC for rare Markov-chain trajectories";

  py::register_exception<DegeneracyError>(m, "DegeneracyError");

  py::class_<AtmParams>(m, "AtmParams")
      .def(py::init([](int sources, int barrier, double lambda, double mu, double alpha0,
                       double alpha1) {
             AtmParams p{sources, barrier, lambda, mu, alpha0, alpha1};
             p.validate();
             return p;
           }),
           py::arg("sources") = 20, py::arg("barrier") = 10, py::arg("lambda_") = 0.5,
           py::arg("mu") = 10.0, py::arg("alpha0") = 1.0, py::arg("alpha1") = 3.0)
      .def_readwrite("sources", &AtmParams::sources)
      .def_readwrite("barrier", &AtmParams::barrier)
      .def_readwrite("lambda_", &AtmParams::lambda)
      .def_readwrite("mu", &AtmParams::mu)
      .def_readwrite("alpha0", &AtmParams::alpha0)
      .def_readwrite("alpha1", &AtmParams::alpha1);

  py::class_<StripParams>(m, "StripParams")
      .def(py::init([](double l0, double u0, double lt, double ut, double t, double delta) {
             StripParams p{l0, u0, lt, ut, t, delta};
             p.validate();
             return p;
           }),
           py::arg("l0") = -1.0, py::arg("u0") = 1.0, py::arg("lt") = 5.0,
           py::arg("ut") = 5.1, py::arg("t") = 2.0, py::arg("delta") = 0.01)
      .def_readwrite("l0", &StripParams::l0)
      .def_readwrite("u0", &StripParams::u0)
      .def_readwrite("lt", &StripParams::lt)
      .def_readwrite("ut", &StripParams::ut)
      .def_readwrite("t", &StripParams::t)
      .def_readwrite("delta", &StripParams::delta);

  py::class_<SisParams>(m, "SisParams")
      .def(py::init([](double alpha, double beta, double gamma, double epsilon, int m_) {
             SisParams p{alpha, beta, gamma, epsilon, m_};
             return p;
           }),
           py::arg("alpha") = 1.0, py::arg("beta") = 12.0, py::arg("gamma") = 1.0,
           py::arg("epsilon") = 1e-4, py::arg("detection_size") = 10)
      .def_readwrite("alpha", &SisParams::alpha)
      .def_readwrite("beta", &SisParams::beta)
      .def_readwrite("gamma", &SisParams::gamma)
      .def_readwrite("epsilon", &SisParams::epsilon)
      .def_readwrite("detection_size", &SisParams::detection_size);

  m.def("ess", [](const std::vector<double>& w) {
    return ess(std::span<const double>(w.data(), w.size()));
  });
  m.def("bessel_k1", &bessel_k1);
  m.def("stationary_density", &stationary_density);
  m.def("euler_forward_density", &euler_forward_density);
  m.def("invert_drift_map", &invert_drift_map);

  m.def(
      "run_atm",
      [](const AtmParams& params, int terminal_on, int particles, std::uint64_t seed,
         double ess_threshold, std::uint64_t step_cap, int threads) {
        const AtmModel model(params, terminal_on);
        const auto ens = run_reverse_smc(model, particles, seed,
                                         make_options(ess_threshold, step_cap, threads));
        return summary_dict(estimate_unconditional(ens, [](const auto&) { return 1.0; }));
      },
      py::arg("params"), py::arg("terminal_on"), py::arg("particles") = 10000,
      py::arg("seed") = 1, py::arg("ess_threshold") = 0.5,
      py::arg("step_cap") = 1000000, py::arg("threads") = 1,
      "reverse-time SMC estimate of the probability of hitting (b, k) before emptying");

  m.def("atm_exact_hitting", &exact_hitting_distribution, py::arg("params"),
        "linear-system oracle for small instances; returns the vector over k");

  m.def(
      "run_hyperbolic",
      [](const StripParams& params, int particles, std::uint64_t seed, double ess_threshold,
         std::uint64_t step_cap, int threads) {
        const HyperbolicModel model(params);
        const auto ens = run_reverse_smc(model, particles, seed,
                                         make_options(ess_threshold, step_cap, threads));
        return summary_dict(estimate_unconditional(ens, [](const auto&) { return 1.0; }));
      },
      py::arg("params"), py::arg("particles") = 1000, py::arg("seed") = 1,
      py::arg("ess_threshold") = 0.5, py::arg("step_cap") = 1000000, py::arg("threads") = 1,
      "reverse-time SMC estimate of the strip containment probability");

  m.def(
      "containment_oracle",
      [](const StripParams& params, long paths, std::uint64_t seed) {
        return containment_oracle(params, paths, seed);
      },
      py::arg("params"), py::arg("paths") = 100000, py::arg("seed") = 1,
      "naive forward Monte Carlo of the same Euler chain (non-rare geometries)");

  m.def(
      "simulate_epidemic",
      [](int rows, int cols, const SisParams& params, std::uint64_t seed) {
        const Network net = Network::grid(rows, cols);
        const EpidemicDraw draw = simulate_forward_epidemic(params, net, seed);
        std::vector<int> observed(draw.observed.infected.begin(),
                                  draw.observed.infected.end());
        return py::make_tuple(observed, draw.source);
      },
      py::arg("rows"), py::arg("cols"), py::arg("params"), py::arg("seed") = 1,
      "forward epidemic until detection; returns (observed vertices, source vertex)");

  m.def(
      "run_sis",
      [](int rows, int cols, const SisParams& params, const std::vector<int>& observed,
         int particles, std::uint64_t seed, double ess_threshold, std::uint64_t step_cap,
         int threads) {
        const Network net = Network::grid(rows, cols);
        SisState obs;
        for (int v : observed) obs.add(v);
        const SisModel model(params, net, obs);
        const auto ens = run_reverse_smc(model, particles, seed,
                                         make_options(ess_threshold, step_cap, threads));
        const auto surface = likelihood_surface(ens, net.size());
        py::dict d;
        d["surface"] = surface;
        d["argmax"] = surface_argmax(surface);
        d["resample_events"] = ens.diagnostics.resample_events;
        d["elapsed_seconds"] = ens.diagnostics.elapsed_seconds;
        return d;
      },
      py::arg("rows"), py::arg("cols"), py::arg("params"), py::arg("observed"),
      py::arg("particles") = 30000, py::arg("seed") = 1, py::arg("ess_threshold") = 0.5,
      py::arg("step_cap") = 1000000, py::arg("threads") = 1,
      "source-likelihood surface of an observed infection");

  m.def(
      "run_ams_atm",
      [](const AtmParams& params, int particles, int kill_count, int mcmc_steps,
         std::uint64_t seed) {
        SplittingConfig cfg;
        cfg.particles = particles;
        cfg.kill_count = kill_count;
        cfg.mcmc_steps = mcmc_steps;
        const AtmSplitting ams(params, cfg);
        const AmsResult res = ams.run(seed);
        py::dict d;
        d["estimate"] = res.estimate;
        d["std_error"] = res.std_error;
        d["iterations"] = res.iterations;
        d["per_terminal"] = res.per_terminal;
        return d;
      },
      py::arg("params"), py::arg("particles") = 1000, py::arg("kill_count") = 1,
      py::arg("mcmc_steps") = 1, py::arg("seed") = 1,
      "adaptive multilevel splitting baseline for the ATM barrier event");

  m.def(
      "green_function_oracle",
      [](const std::vector<std::vector<double>>& transition, const std::vector<double>& mu,
         const std::vector<bool>& is_target) {
        const int n = static_cast<int>(transition.size());
        DenseMatrix p(n, n);
        for (int i = 0; i < n; ++i) {
          if (static_cast<int>(transition[i].size()) != n)
            throw std::invalid_argument("transition matrix must be square");
          for (int j = 0; j < n; ++j) p.at(i, j) = transition[i][j];
        }
        return green_function_oracle(p, mu, is_target);
      },
      py::arg("transition"), py::arg("mu"), py::arg("is_target"),
      "expected visit counts before absorption (linear solve)");
}
