#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qet/circuit.hpp"
#include "qet/model.hpp"
#include "qet/noise.hpp"
#include "qet/protocol.hpp"

namespace qet::cli {

inline constexpr const char* kToolVersion = "qet 0.1.0";

// Raised by the pipeline when a cross-path consistency check fails
// (analytic vs exact-circuit agreement, report schema, ...). The CLI maps
// it to exit code 3.
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised for malformed configs; the CLI maps it to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class PhiMode { ClosedForm, Optimized, Explicit };

struct ExperimentConfig {
  std::string variant = "minimal";  // minimal | miso | simo
  double h = 1.0;
  double k = 1.0;
  std::uint64_t shots = 1024;
  std::uint64_t seed = 1;
  std::string backend_profile = "none";  // none | builtin label | profile file path
  bool mitigation = false;
  std::string mitigation_method = "nnls";  // nnls | inverse
  PhiMode phi_mode = PhiMode::ClosedForm;
  double phi_value = 0.0;  // explicit mode
  std::string output;      // empty = stdout
  std::string format = "csv";  // csv | json
};

// key = value lines, '#' comments; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

struct ObservableRow {
  std::string name;
  double analytic = 0;
  double exact_circuit = 0;
  double sampled = 0;
  double sampled_stderr = 0;
  std::optional<double> noisy;
  std::optional<double> mitigated;
};

struct ExperimentSummary {
  double e_deposit_alice = 0;
  std::optional<double> e_deposit_charlie;
  double e_receiver = 0;
  double efficiency_v_only = 0;
  double phi_used = 0;
  std::string sign_convention;  // "plus_eta" | "minus_eta"
  double xi = 0;
  double eta = 0;
  double trace_total = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ObservableRow> rows;
  ExperimentSummary summary;
  std::string tool_version = kToolVersion;
};

// model -> analytic protocol pass -> circuits -> exact check -> sampling ->
// optional readout noise -> optional mitigation.
ExperimentReport run_experiment(const ExperimentConfig& config);

std::string to_csv(const ExperimentReport& r);
std::string to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const std::string& text);
ExperimentReport report_from_csv(const std::string& text);

// Renders in config.format and writes to config.output (or returns for
// stdout when output is empty).
std::string render_report(const ExperimentReport& r);
void write_report(const ExperimentReport& r);

//=========================================================================
// Parameter sweeps
//=========================================================================

struct SweepConfig {
  std::string variant = "simo";
  std::vector<double> hs;
  std::vector<double> ks;
  std::string output;
  std::string format = "csv";
};

struct SweepPoint {
  double h = 0, k = 0;
  double phi_star = 0;
  double e_receiver = 0;
  double e_deposit = 0;
  double efficiency_v_only = 0;
  std::map<std::string, double> v_terms;
  bool all_receiver_v_nonpositive = false;
};

struct SweepReport {
  SweepConfig config;
  std::vector<SweepPoint> points;
  bool all_points_pass = false;
  std::vector<std::string> warnings;  // e.g. deduplicated grid points
};

SweepReport run_sweep(const SweepConfig& config);
std::string sweep_to_csv(const SweepReport& r);
std::string sweep_to_json(const SweepReport& r);

//=========================================================================
// Cross-backend comparison table
//=========================================================================

struct CompareRow {
  std::string variant;
  double h = 0, k = 0;
  std::string observable;
  double analytic = 0;
  double simulator = 0;  // noiseless sampled estimate
  std::map<std::string, double> mitigated;    // profile label -> estimate
  std::map<std::string, double> unmitigated;  // profile label -> estimate
  std::optional<double> paper_value;
  std::optional<double> delta;  // analytic - paper_value
};

struct CompareTable {
  std::vector<CompareRow> rows;
  std::vector<std::string> warnings;
};

// Merges reports (each optionally carrying a noise profile) into one table;
// reference values are joined from a CSV data file when present.
CompareTable compare_table(const std::vector<ExperimentReport>& reports,
                           const std::string& paper_values_csv_path);
std::string compare_to_csv(const CompareTable& t);
std::string compare_to_json(const CompareTable& t);

// Quick invariant pass used by the `selftest` verb; returns a list of
// failure messages (empty = healthy).
std::vector<std::string> selftest();

}  // namespace qet::cli
