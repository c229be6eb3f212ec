#pragma once

#include <utility>
#include <vector>

#include "tfe/core_model.hpp"
#include "tfe/trajectory.hpp"
#include "tfe/weighted_calculus.hpp"

namespace tfe {

/// V = 1/2 x^(alpha+1) (1+u)^(alpha/2) g_alpha(D^2 u), the vertically averaged
/// film velocity, and its contact-line value.
struct VelocityReport {
  GridField V;
  double V_contact = 0.0;       ///< a/2 from the contact-slope fit
  double V_extrapolated = 0.0;  ///< intercept of a linear fit of V near x = 0
  double V_sup = 0.0;
  double cumulative_L2_in_time = 0.0;  ///< filled by trajectory-level analysis
};

VelocityReport velocity_field(const GridField& u, double alpha, int fit_window = 16,
                              double tol_fit = 1e-2);

/// Variant reusing an already computed flux potential and contact fit.
VelocityReport velocity_field(const GridField& u, const GridField& w,
                              const ContactCoefficients& contact, double alpha);

/// Film reconstructed from the von-Mises variables: base points Y(x) and the
/// height samples (y, h) = (Y(x_i), x_i).
struct PhysicalProfile {
  GridField Y;
  double Y0 = 0.0;
  std::vector<std::pair<double, double>> height_samples;
  double time_original = 0.0;
};

/// Y(x_i) = Y0 + int_0^{x_i} dxi / sqrt(1+u), trapezoidal with F(0) = 1.
PhysicalProfile von_mises_reconstruct(const GridField& u, double Y0, double t_rescaled = 0.0,
                                      double alpha = 3.0);

/// Film height at base point y by piecewise-linear inversion of Y; 0 left of
/// the contact line.
double film_height_at(const PhysicalProfile& profile, double y);

/// t_original = 2^(alpha-1) t_rescaled.
double original_time(double t_rescaled, double alpha);

struct ContactLinePoint {
  double t_rescaled = 0.0;
  double t_original = 0.0;
  double Y0 = 0.0;
};

/// Integrates dY0/dt = a(t)/2 (rescaled time) with the trapezoidal rule.
std::vector<ContactLinePoint> advance_contact_line(const Trajectory& traj, double Y0_initial = 0.0);

struct DecayReport {
  bool B_nonincreasing = true;
  int first_B_increase = -1;
  std::vector<double> t, B, tB, sup_u, sup_du;
  double tB_reference = 0.0;  ///< t B(t) at the record closest to t_reference
  double tB_final = 0.0;
  double exponent_u = 0.0;    ///< predicted o(t^e) rate of sup x^b1 |u|: (2 b1 - 1)/(3a - 1)
  double exponent_du = 0.0;   ///< predicted rate of sup x^b2 |u_x|: (2 b2 - 3)/(3a - 1)
  double fitted_slope_u = 0.0;   ///< log-log slope over t >= t_reference
  double fitted_slope_du = 0.0;
  bool sup_u_nonincreasing_after_transient = true;
  bool sup_du_nonincreasing_after_transient = true;
  double max_dissipation_epsilon = 0.0;  ///< max_j 1 + (B_j - B_{j-1}) / (h C_j)
};

DecayReport decay_monitor(const Trajectory& traj, double t_reference = 1.0);

/// sum_{j>=1} h V_sup,j^2 / (A0 + B0); 0 when A0 + B0 = 0.
double velocity_bound_constant(const Trajectory& traj);

/// [ sup_j (A_j + B_j) + sum_j h (||du/h||^2 + B_j + C_j) ] / (A0 + B0).
double global_bound_constant(const Trajectory& traj);

/// Total variation of the contact-line path.
double contact_line_variation(const std::vector<ContactLinePoint>& path);

/// sum_j h (|a_{j-1}| + |a_j|)/4, the trapezoidal integral of |a|/2.
double contact_speed_integral(const Trajectory& traj);

}  // namespace tfe
