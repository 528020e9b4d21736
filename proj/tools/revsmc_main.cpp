#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "revsmc/experiments.hpp"

namespace {

// REVSMC_LOG=off|info|debug
int log_level() {
  const char* env = std::getenv("REVSMC_LOG");
  if (env == nullptr) return 0;
  const std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

class StderrSink : public revsmc::EventSink {
 public:
  explicit StderrSink(int level) : level_(level) {}
  void level_crossed(int level, double ess, bool resampled) override {
    if (level_ >= 2)
      std::cerr << "revsmc: level " << level << " ess " << ess
                << (resampled ? " (resampled)\n" : "\n");
  }
  void particle_zeroed(int slot, const std::string& reason) override {
    if (level_ >= 2) std::cerr << "revsmc: particle " << slot << " zeroed: " << reason << "\n";
  }
  void degeneracy(const std::string& where) override {
    if (level_ >= 1) std::cerr << "revsmc: degeneracy in " << where << "\n";
  }
  void splitting_level(long iteration, double level) override {
    if (level_ >= 2 && iteration % 1000 == 0)
      std::cerr << "revsmc: splitting iteration " << iteration << " level " << level << "\n";
  }

 private:
  int level_;
};

int run_command(const std::string& config_arg, std::optional<std::uint64_t> seed,
                std::optional<int> jobs, std::optional<std::string> out_path) {
  revsmc::ExperimentConfig cfg;
  try {
    if (const revsmc::Preset* preset = revsmc::find_preset(config_arg)) {
      cfg = revsmc::parse_config_text(preset->text);
    } else {
      cfg = revsmc::parse_config_file(config_arg);
    }
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = *jobs;
    if (out_path) cfg.output = *out_path;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "revsmc: " << e.what() << "\n";
    return 2;
  }

  StderrSink sink(log_level());
  std::vector<revsmc::ResultRow> rows;
  try {
    rows = revsmc::run_experiment(cfg, &sink);
  } catch (const std::exception& e) {
    std::cerr << "revsmc: " << e.what() << "\n";
    return 3;
  }

  if (cfg.output.empty()) {
    revsmc::write_results(std::cout, cfg, rows);
  } else {
    std::ofstream out(cfg.output);
    if (!out) {
      std::cerr << "revsmc: cannot write '" << cfg.output << "'\n";
      return 2;
    }
    revsmc::write_results(out, cfg, rows);
    if (log_level() >= 1)
      std::cerr << "revsmc: wrote " << rows.size() << " rows to " << cfg.output << "\n";
  }

  bool any_ok = false;
  for (const auto& row : rows) any_ok |= (row.status == "ok");
  if (!any_ok) {
    std::cerr << "revsmc: every replicate aborted (degenerate)\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reverse-time multilevel SMC experiments"};
  app.require_subcommand(1);

  std::string config_arg;
  std::uint64_t seed_val = 0;
  int jobs_val = 0;
  std::string out_val;
  auto* run = app.add_subcommand("run", "run an experiment from a config file or preset");
  run->add_option("config", config_arg, "config file path or preset name")->required();
  auto* seed_opt = run->add_option("--seed", seed_val, "override the master seed");
  auto* jobs_opt = run->add_option("--jobs", jobs_val, "parallel replicates");
  auto* out_opt = run->add_option("--out", out_val, "output CSV path (default stdout)");

  std::vector<std::string> files;
  std::string summary_out;
  auto* summarize = app.add_subcommand("summarize", "aggregate result files");
  summarize->add_option("files", files, "result CSV files")->required()->expected(-1);
  auto* sum_out_opt = summarize->add_option("--out", summary_out, "summary CSV path");

  auto* presets_cmd = app.add_subcommand("presets", "preset management");
  auto* presets_list = presets_cmd->add_subcommand("list", "list bundled presets");
  presets_cmd->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) {
    return run_command(config_arg,
                       seed_opt->count() ? std::optional<std::uint64_t>(seed_val)
                                         : std::nullopt,
                       jobs_opt->count() ? std::optional<int>(jobs_val) : std::nullopt,
                       out_opt->count() ? std::optional<std::string>(out_val)
                                        : std::nullopt);
  }
  if (summarize->parsed()) {
    try {
      std::vector<revsmc::ResultRow> rows;
      for (const auto& f : files) {
        auto part = revsmc::read_results_file(f);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      const auto summary = revsmc::summarize_rows(rows);
      if (sum_out_opt->count()) {
        std::ofstream out(summary_out);
        if (!out) {
          std::cerr << "revsmc: cannot write '" << summary_out << "'\n";
          return 2;
        }
        revsmc::write_summary(out, summary);
      } else {
        revsmc::write_summary(std::cout, summary);
      }
    } catch (const std::exception& e) {
      std::cerr << "revsmc: " << e.what() << "\n";
      return 2;
    }
    return 0;
  }
  if (presets_list->parsed()) {
    for (const auto& p : revsmc::presets())
      std::cout << p.name << "\t" << p.description << "\n";
    return 0;
  }
  return 2;
}
