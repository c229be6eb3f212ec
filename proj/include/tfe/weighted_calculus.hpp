#pragma once

#include <map>
#include <string>

#include "tfe/core_model.hpp"

namespace tfe {

/// Three-point second difference on the nonuniform nodes; exact on quadratics
/// at interior nodes. Ghost values are u(0) = 0 and u(L) = 0.
GridField second_derivative(const GridField& u);

/// Three-point first difference with the same ghosts; exact on quadratics.
GridField first_derivative(const GridField& u);

/// Composite quadrature of x^(nu p) |u|^p.
double weighted_integral(const GridField& u, double nu, double p);

/// Quadrature inner product sum_i q_i a_i b_i.
double quadrature_dot(const GridField& a, const GridField& b);

/// w = x^(alpha+2) g_alpha(D^2 u), the flux potential.
GridField flux_potential(const GridField& u, double alpha);

/// A = int u^2.
double norm_A(const GridField& u);
/// B = int x^(alpha+2) |D^2 u|^(alpha+1).
double norm_B(const GridField& u, double alpha);
/// C = int (D^2 w)^2, with D^2 applied to the flux potential.
double norm_C(const GridField& u, double alpha);

struct ContactCoefficients {
  double a = 0.0;             ///< slope of w at the origin
  double c = 0.0;             ///< amplitude of the c x^((alpha-1)/alpha) profile
  double fit_residual = 0.0;  ///< relative least-squares misfit of w ~ a x
  int window = 0;             ///< number of near-origin nodes actually used
  bool resolved = true;       ///< false when fit_residual > tol_fit
};

/// Fits w ~ a x through the origin on the first `fit_window` nodes, shrinking
/// the window (halving, down to 4 nodes) while the misfit exceeds tol_fit, and
/// returns c = alpha^2/(1-alpha) * g_alpha^{-1}(a).
ContactCoefficients fit_contact_slope(const GridField& w, double alpha, int fit_window,
                                      double tol_fit);

ContactCoefficients extract_contact_coefficients(const GridField& u, double alpha,
                                                 int fit_window, double tol_fit);

/// Both sides of one weighted inequality evaluated on a field.
struct NormReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool degenerate = false;  ///< lhs = rhs = 0
  bool skipped = false;     ///< a precondition (e.g. smallness) failed
  std::string note;
  std::map<std::string, double> parameters;
};

/// Fills ratio/degenerate from lhs and rhs.
NormReport make_report(std::string name, double lhs, double rhs,
                       std::map<std::string, double> parameters = {});

}  // namespace tfe
