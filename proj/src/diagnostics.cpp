#include "tfe/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tfe/flux.hpp"

namespace tfe {

namespace {

void require_transform(const GridField& u) {
  if (u.min() <= -1.0) throw NumericalError("von-Mises transform degenerate: min(1+u) <= 0");
}

// Least-squares intercept of v ~ c0 + c1 x over the first m nodes.
double linear_intercept(std::span<const double> x, std::span<const double> v, int m) {
  double sx = 0.0, sv = 0.0, sxx = 0.0, sxv = 0.0;
  for (int i = 0; i < m; ++i) {
    sx += x[i];
    sv += v[i];
    sxx += x[i] * x[i];
    sxv += x[i] * v[i];
  }
  const double det = m * sxx - sx * sx;
  if (det == 0.0) return v[0];
  return (sxx * sv - sx * sxv) / det;
}

bool nonincreasing(double prev, double next) {
  return next <= prev + 1e-12 * std::abs(prev) + std::numeric_limits<double>::min();
}

double loglog_slope(const std::vector<double>& t, const std::vector<double>& y, double t_from) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_from || t[i] <= 0.0 || y[i] <= 0.0) continue;
    const double lx = std::log(t[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  const double det = m * sxx - sx * sx;
  if (m < 2 || det <= 0.0) return 0.0;
  return (m * sxy - sx * sy) / det;
}

}  // namespace

VelocityReport velocity_field(const GridField& u, const GridField& w,
                              const ContactCoefficients& contact, double alpha) {
  require_transform(u);
  const auto x = u.grid()->nodes();
  std::vector<double> v(u.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = 0.5 * std::pow(1.0 + u[i], 0.5 * alpha) * w[i] / x[i];
    sup = std::max(sup, std::abs(v[i]));
  }
  VelocityReport r{GridField(u.grid(), v)};
  r.V_contact = 0.5 * contact.a;
  r.V_sup = sup;
  r.V_extrapolated = linear_intercept(x, v, std::max(2, contact.window));
  return r;
}

VelocityReport velocity_field(const GridField& u, double alpha, int fit_window, double tol_fit) {
  require_transform(u);
  const auto w = flux_potential(u, alpha);
  return velocity_field(u, w, fit_contact_slope(w, alpha, fit_window, tol_fit), alpha);
}

PhysicalProfile von_mises_reconstruct(const GridField& u, double Y0, double t_rescaled,
                                      double alpha) {
  require_transform(u);
  const auto gaps = u.grid()->cell_widths();
  const auto x = u.grid()->nodes();
  std::vector<double> Y(u.size());
  double inv_prev = 1.0;  // 1/F at the contact line
  double acc = Y0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double inv = 1.0 / std::sqrt(1.0 + u[i]);
    acc += 0.5 * gaps[i] * (inv_prev + inv);
    Y[i] = acc;
    inv_prev = inv;
  }
  PhysicalProfile p{GridField(u.grid(), Y)};
  p.Y0 = Y0;
  p.time_original = original_time(t_rescaled, alpha);
  p.height_samples.reserve(Y.size());
  double last = Y0;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    if (!(Y[i] > last)) throw NumericalError("reconstruction: Y not strictly increasing");
    last = Y[i];
    p.height_samples.emplace_back(Y[i], x[i]);
  }
  return p;
}

double film_height_at(const PhysicalProfile& profile, double y) {
  if (y <= profile.Y0) return 0.0;
  const auto& s = profile.height_samples;
  auto it = std::lower_bound(s.begin(), s.end(), y,
                             [](const std::pair<double, double>& a, double v) { return a.first < v; });
  if (it != s.end() && it->first == y) return it->second;
  double y0, h0, y1, h1;
  if (it == s.begin()) {
    y0 = profile.Y0;
    h0 = 0.0;
    y1 = it->first;
    h1 = it->second;
  } else if (it == s.end()) {
    y0 = s[s.size() - 2].first;
    h0 = s[s.size() - 2].second;
    y1 = s.back().first;
    h1 = s.back().second;
  } else {
    y0 = std::prev(it)->first;
    h0 = std::prev(it)->second;
    y1 = it->first;
    h1 = it->second;
  }
  return h0 + (h1 - h0) * (y - y0) / (y1 - y0);
}

double original_time(double t_rescaled, double alpha) {
  return std::pow(2.0, alpha - 1.0) * t_rescaled;
}

std::vector<ContactLinePoint> advance_contact_line(const Trajectory& traj, double Y0_initial) {
  std::vector<ContactLinePoint> path;
  path.reserve(traj.steps.size());
  const double alpha = traj.params.alpha;
  double Y0 = Y0_initial;
  for (std::size_t j = 0; j < traj.steps.size(); ++j) {
    const auto& s = traj.steps[j];
    if (j > 0) {
      const auto& p = traj.steps[j - 1];
      Y0 += 0.25 * (s.t - p.t) * (p.a_coeff + s.a_coeff);
    }
    path.push_back({s.t, original_time(s.t, alpha), Y0});
  }
  return path;
}

DecayReport decay_monitor(const Trajectory& traj, double t_reference) {
  DecayReport r;
  const double alpha = traj.params.alpha;
  r.exponent_u = (2.0 * traj.beta1 - 1.0) / (3.0 * alpha - 1.0);
  r.exponent_du = (2.0 * traj.beta2 - 3.0) / (3.0 * alpha - 1.0);
  double best_dt = std::numeric_limits<double>::infinity();
  r.max_dissipation_epsilon = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < traj.steps.size(); ++j) {
    const auto& s = traj.steps[j];
    r.t.push_back(s.t);
    r.B.push_back(s.B);
    r.tB.push_back(s.t * s.B);
    r.sup_u.push_back(s.sup_weighted_u);
    r.sup_du.push_back(s.sup_weighted_du);
    if (std::abs(s.t - t_reference) < best_dt) {
      best_dt = std::abs(s.t - t_reference);
      r.tB_reference = s.t * s.B;
    }
    if (j == 0) continue;
    const auto& p = traj.steps[j - 1];
    if (!nonincreasing(p.B, s.B) && r.B_nonincreasing) {
      r.B_nonincreasing = false;
      r.first_B_increase = s.step;
    }
    if (s.C > 0.0) {
      const double eps = 1.0 + (s.B - p.B) / ((s.t - p.t) * s.C);
      r.max_dissipation_epsilon = std::max(r.max_dissipation_epsilon, eps);
    }
    if (p.t >= t_reference) {
      if (!nonincreasing(p.sup_weighted_u, s.sup_weighted_u)) {
        r.sup_u_nonincreasing_after_transient = false;
      }
      if (!nonincreasing(p.sup_weighted_du, s.sup_weighted_du)) {
        r.sup_du_nonincreasing_after_transient = false;
      }
    }
  }
  if (!std::isfinite(r.max_dissipation_epsilon)) r.max_dissipation_epsilon = 0.0;
  if (!traj.steps.empty()) r.tB_final = traj.last().t * traj.last().B;
  r.fitted_slope_u = loglog_slope(r.t, r.sup_u, t_reference);
  r.fitted_slope_du = loglog_slope(r.t, r.sup_du, t_reference);
  return r;
}

double velocity_bound_constant(const Trajectory& traj) {
  if (traj.steps.empty()) return 0.0;
  const double base = traj.initial().A + traj.initial().B;
  if (base == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 1; j < traj.steps.size(); ++j) {
    const double h = traj.steps[j].t - traj.steps[j - 1].t;
    sum += h * traj.steps[j].V_sup * traj.steps[j].V_sup;
  }
  return sum / base;
}

double global_bound_constant(const Trajectory& traj) {
  if (traj.steps.empty()) return 0.0;
  const double base = traj.initial().A + traj.initial().B;
  if (base == 0.0) return 0.0;
  double sup = 0.0, sum = 0.0;
  for (std::size_t j = 0; j < traj.steps.size(); ++j) {
    const auto& s = traj.steps[j];
    sup = std::max(sup, s.A + s.B);
    if (j == 0) continue;
    const double h = s.t - traj.steps[j - 1].t;
    sum += s.increment_norm2 / h + h * (s.B + s.C);
  }
  return (sup + sum) / base;
}

double contact_line_variation(const std::vector<ContactLinePoint>& path) {
  double tv = 0.0;
  for (std::size_t j = 1; j < path.size(); ++j) tv += std::abs(path[j].Y0 - path[j - 1].Y0);
  return tv;
}

double contact_speed_integral(const Trajectory& traj) {
  double s = 0.0;
  for (std::size_t j = 1; j < traj.steps.size(); ++j) {
    const auto& p = traj.steps[j - 1];
    const auto& c = traj.steps[j];
    s += 0.25 * (c.t - p.t) * (std::abs(p.a_coeff) + std::abs(c.a_coeff));
  }
  return s;
}

}  // namespace tfe
