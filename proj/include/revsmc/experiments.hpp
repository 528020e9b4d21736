#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "revsmc/atm.hpp"
#include "revsmc/engine.hpp"
#include "revsmc/events.hpp"
#include "revsmc/hyperbolic.hpp"
#include "revsmc/sis.hpp"
#include "revsmc/splitting.hpp"

namespace revsmc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SisExperimentConfig {
  int rows = 10;
  int cols = 10;
  SisParams params;
  std::string observed_file;   // optional: load the observed configuration
  std::string edge_list_file;  // optional: non-grid network ("u v" per line)
};

struct ExperimentConfig {
  std::string experiment;  // atm | atm-large | hyperbolic | hyperbolic-sweep |
                           // sis | sis-surface | atm-splitting | hyperbolic-splitting
  std::uint64_t seed = 1;
  int particles = 1000;
  int replicates = 1;
  int jobs = 1;
  std::string output;

  AtmParams atm;
  StripParams hyperbolic;
  std::vector<std::pair<double, double>> sweep;  // terminal intervals for the sweep
  SisExperimentConfig sis;
  SplittingConfig splitting;          // particles == 0 inherits the top-level count
  int splitting_initials = 1000;      // initial conditions for hyperbolic-splitting
  SmcOptions smc;

  void validate() const;
  SplittingConfig resolved_splitting() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

struct ResultRow {
  std::string experiment;
  int replicate = 0;
  std::string condition;
  double estimate = 0.0;
  double std_error = 0.0;
  double ess_min = 0.0;     // nan where ESS is not defined (splitting)
  long resample_count = 0;  // splitting rows carry the iteration count here
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok | degenerate | stagnated
  std::string detail;
};

std::uint64_t replicate_seed(std::uint64_t master, int replicate,
                             const std::string& experiment);

std::vector<ResultRow> run_experiment(const ExperimentConfig& config,
                                      EventSink* sink = nullptr);

// CSV with a '#'-prefixed JSON metadata line carrying the config echo.
void write_results(std::ostream& out, const ExperimentConfig& config,
                   const std::vector<ResultRow>& rows);
std::string format_row(const ResultRow& row);

struct SummaryRow {
  std::string experiment;
  std::string condition;
  long count = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

std::vector<ResultRow> read_results_file(const std::string& path);
std::vector<SummaryRow> summarize_rows(const std::vector<ResultRow>& rows);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);

struct Preset {
  const char* name;
  const char* description;
  const char* text;
};
std::span<const Preset> presets();
const Preset* find_preset(std::string_view name);

}  // namespace revsmc
