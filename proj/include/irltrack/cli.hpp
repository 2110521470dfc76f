#pragma once

// Command implementations behind the irltrack executable: single runs with
// CSV/metrics export, parallel ablations, and plot-script emission.

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "irltrack/config.hpp"
#include "irltrack/sim.hpp"

namespace irltrack {

/// Column names of run.csv in order. W1..W{n_critic}, Wi1..Wi{n_identifier};
/// the identifier weights are flattened row-major (regressor row, state column).
std::vector<std::string> csv_columns(int n_critic, int n_identifier);
std::string csv_header(int n_critic, int n_identifier);
/// One CSV line (no trailing newline), numbers printed with %.12g.
std::string csv_row(const RunRow& r);

nlohmann::json metrics_json(const Metrics& m);

/// Writes <out>/run.csv (when enabled), <out>/metrics.json and
/// <out>/config.json. Throws IoError, ConfigError or NumericalFailure.
Metrics cmd_run(const ExperimentConfig& cfg, const std::string& out_dir);

struct AblationRow {
  std::string variant;
  std::string status;  // "ok", "config_error", "numerical_failure", "io_error"
  std::string message;
  std::optional<Metrics> metrics;
};

/// Worker count from IRLTRACK_WORKERS, defaulting to the hardware concurrency.
/// Throws ConfigError if the variable is set but not a positive integer.
std::size_t worker_count();

/// Runs every variant (the base alone when the list is empty) on `workers`
/// threads, each into <out>/<variant>/, then writes <out>/table.csv.
/// Per-variant failures are recorded in their row.
std::vector<AblationRow> cmd_ablate(const ExperimentConfig& base, const std::vector<Variant>& variants,
                                    const std::string& out_dir, std::size_t workers);

/// Validates <run>/run.csv and writes <run>/plot_run.py (5 panels). Returns
/// the script path. Throws IoError for a missing/empty CSV and ConfigError
/// listing any missing columns.
std::string cmd_plot(const std::string& run_dir);

}  // namespace irltrack
