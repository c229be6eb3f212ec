#pragma once

#include <functional>
#include <optional>
#include <string>

#include "tfe/core_model.hpp"
#include "tfe/trajectory.hpp"

namespace tfe {

/// Data of one implicit step: minimize
///   J(u) = sum_i q_i [ u_i^2/2 + h/(alpha+1) x_i^(alpha+2) |D^2 u|_i^(alpha+1) - ftilde_i u_i ].
struct StepProblem {
  GridField u_prev;
  GridField f_prev;
  GridField f_tilde;  ///< h * f_prev + u_prev
  double h;
  double alpha;

  static StepProblem make(GridField u_prev, GridField f_prev, double h, double alpha);
};

struct NewtonOptions {
  double tol = 1e-9;      ///< on el_residual / max(1, ||f_prev||), floored at el_floor
  int max_iter = 200;
  double eps_reg = 1e-10;  ///< Hessian-only smoothing of |v|^(alpha-1)
  double armijo = 1e-4;
  double backtrack = 0.5;
  int polish_steps = 2;  ///< extra full Newton steps once converged
};

struct MinimizeOutcome {
  GridField u_next;
  double J_value = 0.0;
  int iterations = 0;
  double el_residual = 0.0;  ///< || (u - u_prev)/h + L u - f_prev ||_q
  double el_floor = 0.0;     ///< rounding bound of el_residual at u_next
  bool converged = false;
  std::string message;
};

double functional_J(const GridField& u, const StepProblem& problem);

/// ||(u - u_prev)/h + L(u) - f_prev||_q for an arbitrary candidate u.
double euler_lagrange_residual(const GridField& u, const StepProblem& problem);

/// Damped regularized Newton with backtracking on J, started from
/// `warm_start` (defaults to u_prev).
MinimizeOutcome minimize_step(const StepProblem& problem, const NewtonOptions& options = {},
                              const std::optional<GridField>& warm_start = std::nullopt);

/// Restart state. Doubles are stored with round-trip precision so that a
/// resumed run reproduces the ledger values of an uninterrupted one.
struct Checkpoint {
  Parameters params;
  bool leading_order_only = false;
  int step = 0;
  GridField u;
  double A0 = 0.0;
  double B0 = 0.0;
  double sum_hB = 0.0;
};

void write_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint read_checkpoint(const std::string& path);

struct RunOptions {
  bool leading_order_only = false;
  double smallness_gate = 1e-2;  ///< A0 + B0 must not exceed this
  int record_every = 1;          ///< store u every k steps (0: first and last only)
  int max_newton_iter = 200;
  double ledger_tol = 1e-10;     ///< relative violation allowed per step
  double beta1 = 0.0;
  std::optional<double> beta2;   ///< defaults to 2/(alpha+1)
  std::string checkpoint_path;   ///< written every checkpoint_every steps and at the end
  int checkpoint_every = 0;
  std::function<void(const StepRecord&)> on_step;
};

/// Runs the scheme full-discrete from u0 up to T. Never throws on numerical
/// breakdown during the run; the trajectory carries a FailureRecord instead.
/// Throws ConfigError for invalid parameters or oversized initial data.
Trajectory run_simulation(const GridField& u0, const Parameters& params,
                          const RunOptions& options = {});

/// Continues a run from a checkpoint; step numbering and time continue.
Trajectory resume_simulation(const Checkpoint& cp, const RunOptions& options = {});

}  // namespace tfe
