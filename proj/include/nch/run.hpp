#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nch/config.hpp"
#include "nch/verification.hpp"

namespace nch {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  // run completed, a check did not pass
  kExitConfig = 2,
  kExitStateSolve = 3,
  kExitSensitivity = 4,
  kExitLineSearch = 5,
  kExitOther = 6,
};

/// Maps an error to its exit code.
int exit_code_for(const std::exception& e) noexcept;

/// Each command writes into resolve_output_dir(cfg.output_dir):
///   summary.json      config hash, version, resolved config, reports, status
///   index.txt         "step t field file" for every snapshot
///   snapshots/*.bin   phi, mu, w, theta every `stride` steps (and the last)
///   fields/*.bin      phi, mu, w, theta as whole space-time arrays
///   timeseries.csv    t, mean/min/max phi, per-level cost terms, stationarity
/// optimize additionally writes trace.csv and control/u_*.bin.
/// Returns kExitOk, or kExitCheckFailed when a reported check fails. Solver
/// errors propagate as exceptions after a partial summary has been written.
int run_simulate(const RunConfig& cfg, std::ostream& log);
int run_optimize(const RunConfig& cfg, std::ostream& log);
int run_grad_check(const RunConfig& cfg, const std::optional<std::vector<double>>& eps,
                   std::ostream& log);
int run_adjoint_check(const RunConfig& cfg, const std::optional<AdjointMode>& mode,
                      std::ostream& log);
/// Writes summary.json into `dir`.
int run_battery_command(bool quick, const std::filesystem::path& dir, std::ostream& log);

/// gnuplot-ready column files in <run_dir>/plots: one per snapshot
/// (x [y] value, blank line between rows in 2D), timeseries.dat and, for
/// optimize runs, convergence.dat. Throws Error if the run left no artifacts.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& run_dir);

/// One-line rendering used on the console.
std::string format_report(const CheckReport& r);

}  // namespace nch
