#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tfe/core_model.hpp"
#include "tfe/weighted_calculus.hpp"

namespace tfe {

/// One catalog entry with optional exponent overrides. Unset exponents take
/// the entry's default.
struct AuditSpec {
  std::string entry;
  std::optional<double> beta;
  std::optional<double> p;
  std::optional<double> nu;
};

/// Names accepted by inequality_audit.
const std::vector<std::string>& audit_catalog();

/// Evaluates both sides of one catalog inequality on u. Throws ConfigError if
/// the entry is unknown or an exponent lies outside its admissible range.
NormReport inequality_audit(const GridField& u, double alpha, const AuditSpec& spec,
                            int fit_window = 16, double tol_fit = 1e-2);

/// The entries exercised by the randomized refinement study.
std::vector<AuditSpec> default_audit_entries(double alpha);

/// Smooth random test function: a combination of quintic B-splines on a
/// uniform knot sequence, supported in [x_lo, x_hi] with 0 < x_lo < x_hi < L.
class RandomSpline {
 public:
  /// Draws support and coefficients from `rng`; uniforms are built from the
  /// raw 64-bit output so the family is identical on every platform.
  RandomSpline(std::mt19937_64& rng, double L);
  RandomSpline(double x_lo, double knot_spacing, std::vector<double> coefficients);

  double operator()(double x) const;
  double support_begin() const { return x_lo_; }
  double support_end() const;

 private:
  double x_lo_;
  double d_;
  std::vector<double> coeffs_;
};

/// Uniform in [0, 1) from the top 53 bits of one generator draw.
double uniform01(std::mt19937_64& rng);

/// Cardinal quintic B-spline on [0, 6].
double quintic_bspline(double t);

struct AuditStudyOptions {
  double alpha = 3.0;
  double L = 10.0;
  int n_cells = 2048;
  double grading = 2.0;
  int refinements = 1;  ///< levels 0..refinements, doubling n_cells
  int count = 100;
  std::uint64_t seed = 1;
  int fit_window = 16;
  double tol_fit = 1e-2;
  std::vector<AuditSpec> entries;  ///< empty: default_audit_entries(alpha)
};

struct AuditRow {
  NormReport report;
  int field = 0;
  int n_cells = 0;
  int refinement_level = 0;
  double alpha = 0.0;
};

struct AuditEntrySummary {
  std::string entry;
  std::vector<double> max_ratio;  ///< one per refinement level
  double max_relative_change = 0.0;
  bool all_finite = true;
  bool identity = false;  ///< an identity check; judged by max_ratio, not stability
};

struct AuditStudy {
  std::vector<AuditRow> rows;  ///< ordered by (level, field, entry)
  std::vector<AuditEntrySummary> summaries;
};

AuditStudy run_audit_study(const AuditStudyOptions& options);

}  // namespace tfe
