#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tfe/core_model.hpp"
#include "tfe/inequality_audit.hpp"

namespace tfe {

enum class Mode { Full, LeadingOrderOnly, Audit, KernelTest, Sweep };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

/// Initial data. "bump": amplitude (x/width)^2 exp(-x/width).
/// "kernel": (amplitude x^((alpha-1)/alpha) + slope x) chi(x) with a smooth
/// cutoff chi = 1 below cutoff_lo and 0 above cutoff_hi. "spline-random":
/// amplitude times one random quintic spline drawn from `seed`.
/// "sample-file": two columns x u, linearly interpolated onto the grid.
struct ProfileSpec {
  std::string name = "bump";
  double amplitude = 0.01;
  double width = 1.0;
  double slope = 0.0;
  double cutoff_lo = 0.5;
  double cutoff_hi = 0.9;
  std::string sample_file;
};

struct RunConfig {
  Parameters parameters;
  ProfileSpec profile;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  Mode mode = Mode::Full;

  double smallness_gate = 1e-2;
  int record_every = 0;  ///< profile dumps every k steps (0: first and last)
  int checkpoint_every = 0;
  int max_newton_iter = 200;
  double beta1 = 0.0;
  std::optional<double> beta2;
  double decay_reference_time = 1.0;

  int audit_count = 100;
  int audit_refinements = 1;
  double audit_L = 10.0;
  std::vector<AuditSpec> audit_entries;  ///< empty: default entries

  std::vector<int> kernel_levels{512, 1024, 2048};
  double kernel_window_lo = 0.1;  ///< interior window for the residual, as fractions of cutoff_lo
  double kernel_window_hi = 0.9;

  std::vector<double> sweep_h;
  std::vector<int> sweep_n_cells;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Parses key = value lines; '#' starts a comment. Several key=value pairs may
/// share a line. Unknown and duplicate keys are errors reporting the line.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<string>");
RunConfig parse_config(const std::string& path);

/// Audit entry list syntax: name[:beta=v][:p=v][:nu=v], comma separated.
std::vector<AuditSpec> parse_audit_entries(const std::string& s);

/// Samples the configured initial profile on `grid`.
GridField make_initial_profile(const ProfileSpec& spec, const GridPtr& grid, double alpha,
                               std::uint64_t seed);

/// C-infinity step: 1 for x <= lo, 0 for x >= hi.
double smooth_cutoff(double x, double lo, double hi);

}  // namespace tfe
