#include "tfe/weighted_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tfe/kernels.hpp"

namespace tfe {

GridField second_derivative(const GridField& u) {
  const auto& grid = u.grid();
  if (grid->size() < 3) throw NumericalError("second_derivative: fewer than 3 nodes");
  std::vector<double> out(u.size());
  kernels::parallel::apply_stencil(grid->second_difference(), u.values(), out);
  return GridField(grid, std::move(out));
}

GridField first_derivative(const GridField& u) {
  const auto& grid = u.grid();
  if (grid->size() < 3) throw NumericalError("first_derivative: fewer than 3 nodes");
  std::vector<double> out(u.size());
  kernels::parallel::apply_stencil(grid->first_difference(), u.values(), out);
  return GridField(grid, std::move(out));
}

double weighted_integral(const GridField& u, double nu, double p) {
  if (!(p >= 1.0)) throw ConfigError("weighted_integral: p must be >= 1");
  const auto x = u.grid()->nodes();
  std::vector<double> integrand(u.size());
  const double power = nu * p;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = std::abs(u[i]);
    integrand[i] = v == 0.0 ? 0.0 : std::pow(x[i], power) * std::pow(v, p);
  }
  return kernels::parallel::weighted_sum(u.grid()->weights(), integrand);
}

double quadrature_dot(const GridField& a, const GridField& b) {
  if (a.grid() != b.grid()) throw NumericalError("quadrature_dot: fields on different grids");
  return kernels::parallel::weighted_dot(a.grid()->weights(), a.values(), b.values());
}

GridField flux_potential(const GridField& u, double alpha) {
  const auto d2u = second_derivative(u);
  const auto x = u.grid()->nodes();
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    w[i] = std::pow(x[i], alpha + 2.0) * g_alpha(d2u[i], alpha);
  }
  return GridField(u.grid(), std::move(w));
}

double norm_A(const GridField& u) { return quadrature_dot(u, u); }

double norm_B(const GridField& u, double alpha) {
  const auto d2u = second_derivative(u);
  const auto x = u.grid()->nodes();
  std::vector<double> density(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = std::abs(d2u[i]);
    density[i] = v == 0.0 ? 0.0 : std::pow(x[i], alpha + 2.0) * std::pow(v, alpha + 1.0);
  }
  return kernels::parallel::weighted_sum(u.grid()->weights(), density);
}

double norm_C(const GridField& u, double alpha) {
  const auto lw = second_derivative(flux_potential(u, alpha));
  return quadrature_dot(lw, lw);
}

namespace {

struct SlopeFit {
  double a = 0.0;
  double residual = 0.0;
};

SlopeFit slope_through_origin(std::span<const double> x, std::span<const double> w, int m) {
  double sxx = 0.0, sxw = 0.0, sww = 0.0;
  for (int i = 0; i < m; ++i) {
    sxx += x[i] * x[i];
    sxw += x[i] * w[i];
    sww += w[i] * w[i];
  }
  SlopeFit fit;
  fit.a = sxw / sxx;
  if (sww == 0.0) return fit;
  double r2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double r = w[i] - fit.a * x[i];
    r2 += r * r;
  }
  fit.residual = std::sqrt(r2 / sww);
  return fit;
}

}  // namespace

ContactCoefficients fit_contact_slope(const GridField& w, double alpha, int fit_window,
                                      double tol_fit) {
  const int n = static_cast<int>(w.size());
  if (fit_window < 2 || fit_window > std::max(2, n / 4)) {
    throw ConfigError("fit_window: must lie in [2, n_cells/4]");
  }
  const auto x = w.grid()->nodes();
  const auto vals = w.values();

  ContactCoefficients best;
  best.fit_residual = std::numeric_limits<double>::infinity();
  for (int m = fit_window;; m /= 2) {
    const SlopeFit fit = slope_through_origin(x, vals, m);
    if (fit.residual < best.fit_residual) {
      best.a = fit.a;
      best.fit_residual = fit.residual;
      best.window = m;
    }
    if (fit.residual <= tol_fit) {
      best.a = fit.a;
      best.fit_residual = fit.residual;
      best.window = m;
      break;
    }
    if (m / 2 < 4) break;
  }
  best.resolved = best.fit_residual <= tol_fit;
  best.c = alpha * alpha / (1.0 - alpha) * g_alpha_inverse(best.a, alpha);
  return best;
}

ContactCoefficients extract_contact_coefficients(const GridField& u, double alpha,
                                                 int fit_window, double tol_fit) {
  return fit_contact_slope(flux_potential(u, alpha), alpha, fit_window, tol_fit);
}

NormReport make_report(std::string name, double lhs, double rhs,
                       std::map<std::string, double> parameters) {
  NormReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.parameters = std::move(parameters);
  if (rhs > 0.0) {
    r.ratio = lhs / rhs;
  } else if (lhs == 0.0) {
    r.ratio = 0.0;
    r.degenerate = true;
  } else {
    r.ratio = std::numeric_limits<double>::infinity();
    r.note = "rhs vanishes while lhs does not";
  }
  return r;
}

}  // namespace tfe
