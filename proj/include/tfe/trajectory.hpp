#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tfe/core_model.hpp"

namespace tfe {

/// Left and right side of one discrete energy inequality lhs <= rhs.
/// `scale` is the sum of magnitudes of the terms entering it; violations are
/// measured relative to that.
struct LedgerEntry {
  double lhs = 0.0;
  double rhs = 0.0;
  double scale = 0.0;

  double margin() const { return rhs - lhs; }
  /// (lhs - rhs) / scale, or 0 when every term vanishes.
  double relative_violation() const;
  bool holds(double rel_tol) const { return relative_violation() <= rel_tol; }
};

/// One accepted time step (step 0 is the initial state).
struct StepRecord {
  int step = 0;
  double t = 0.0;
  std::optional<GridField> u;  ///< stored every `record_every` steps

  double A = 0.0, B = 0.0, C = 0.0;
  double a_coeff = 0.0, c_coeff = 0.0;
  double fit_residual = 0.0;
  bool coeff_resolved = true;

  double el_residual = 0.0;
  double el_floor = 0.0;
  int newton_iterations = 0;
  LedgerEntry ledger_weak;
  LedgerEntry ledger_max;

  double V_sup = 0.0;
  double V_contact = 0.0;
  double sup_weighted_u = 0.0;   ///< max_i x_i^beta1 |u_i|
  double sup_weighted_du = 0.0;  ///< max_i x_i^beta2 |D u_i|
  double f_norm2 = 0.0;          ///< ||f_{j-1}||^2
  double increment_norm2 = 0.0;  ///< ||u_j - u_{j-1}||^2
  double sum_hB = 0.0;           ///< h * sum_{k<=j} B_k
  double tail_fraction = 0.0;    ///< max |u| on x > 0.9 L relative to max |u|
};

struct FailureRecord {
  int step = 0;
  double t = 0.0;
  std::string kind;  ///< newton-not-converged | ledger-violation | transform-degenerate | smallness-lost
  std::string message;
};

struct Trajectory {
  Parameters params;
  bool leading_order_only = false;
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::vector<StepRecord> steps;
  std::optional<FailureRecord> failure;
  std::optional<GridField> final_u;
  bool support_near_truncation = false;

  bool completed() const { return !failure.has_value(); }
  const StepRecord& initial() const { return steps.front(); }
  const StepRecord& last() const { return steps.back(); }
};

}  // namespace tfe
