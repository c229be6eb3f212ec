#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tfe/config.hpp"
#include "tfe/diagnostics.hpp"
#include "tfe/inequality_audit.hpp"
#include "tfe/trajectory.hpp"

namespace tfe {

/// One pass/fail item of a machine-readable summary. Non-fatal checks are
/// reported but do not change the exit status.
struct Check {
  std::string name;
  bool passed = true;
  bool fatal = true;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

bool all_fatal_passed(const std::vector<Check>& checks);

struct SimulationResult {
  Trajectory trajectory;
  std::vector<ContactLinePoint> contact_line;
  DecayReport decay;
  double velocity_constant = 0.0;  ///< sum h V_sup^2 / (A0 + B0)
  double global_constant = 0.0;
  double max_weak_violation = 0.0;
  double max_max_violation = 0.0;
  double min_leading_margin = 0.0;  ///< min_j (A0/2 - A_j/2 - h sum B) / (A0/2)
  std::vector<Check> checks;
};

/// Builds the grid and initial data from `cfg` and runs the scheme. With
/// leading_order the nonlinearity is switched off.
SimulationResult simulate(const RunConfig& cfg, bool leading_order);
SimulationResult simulate(const GridField& u0, const RunConfig& cfg, bool leading_order);

/// Evaluates the checks of a finished trajectory.
SimulationResult analyse(Trajectory traj, const RunConfig& cfg);

struct KernelLevel {
  int n_cells = 0;
  double residual_l2 = 0.0;   ///< (sum_window q (Lu)^2)^(1/2)
  double residual_max = 0.0;
  double order = 0.0;         ///< log2 of the l2 ratio to the previous level; 0 on the first
};

struct KernelStudy {
  std::vector<KernelLevel> levels;
  double min_order = 0.0;
  double max_order = 0.0;
};

/// Flux residual of the kernel profile on the interior window
/// [kernel_window_lo, kernel_window_hi] * cutoff_lo, for each kernel level.
KernelStudy kernel_annihilation_study(const RunConfig& cfg);

struct SweepCase {
  double h = 0.0;
  int n_cells = 0;
  SimulationResult result;
};

struct SweepStudy {
  std::vector<SweepCase> cases;  ///< ordered by (n_cells, h descending)
  /// For each n_cells with >= 2 step sizes: ||u^(h_k)(T) - u^(h_{k+1})(T)||_q.
  std::vector<std::pair<int, std::vector<double>>> time_differences;
};

/// Runs every (h, n_cells) combination concurrently with isolated state.
SweepStudy run_sweep(const RunConfig& cfg, bool leading_order);

struct DriverOptions {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

/// Executes a CLI subcommand (run, audit, kernel-test, sweep) on a config
/// file and writes its artifacts. Returns the process exit status.
int run_command(const std::string& command, const std::string& config_path,
                const DriverOptions& options, std::ostream& log);

}  // namespace tfe
