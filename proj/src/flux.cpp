#include "tfe/flux.hpp"

#include <cmath>

#include "tfe/kernels.hpp"

namespace tfe {

namespace {

void require_transform(const GridField& u) {
  if (u.min() <= -1.0) throw NumericalError("von-Mises transform degenerate: min(1+u) <= 0");
}

}  // namespace

FluxModel::FluxModel(GridPtr grid, double alpha) : grid_(std::move(grid)), alpha_(alpha) {
  const auto x = grid_->nodes();
  xw_.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xw_[i] = std::pow(x[i], alpha_ + 2.0);
}

double FluxModel::energy(std::span<const double> u, FluxWorkspace& ws) const {
  namespace k = kernels::parallel;
  k::apply_stencil(grid_->second_difference(), u, ws.d2u);
  k::flux_potential(xw_, ws.d2u, alpha_, ws.w, ws.density);
  return k::weighted_sum(grid_->weights(), ws.density);
}

double FluxModel::evaluate(std::span<const double> u, FluxWorkspace& ws) const {
  const double e = energy(u, ws);
  kernels::parallel::gradient_assembly(grid_->second_difference(), grid_->weights(), ws.w, ws.lu);
  return e;
}

FluxAssembly FluxModel::assemble(const GridField& u) const {
  FluxWorkspace ws(u.size());
  const double e = evaluate(u.values(), ws);
  return FluxAssembly{GridField(grid_, std::move(ws.w)), GridField(grid_, std::move(ws.lu)), e};
}

FluxAssembly flux_operator(const GridField& u, double alpha) {
  return FluxModel(u.grid(), alpha).assemble(u);
}

GridField nonlinear_rhs(const GridField& u, const FluxAssembly& flux, double alpha) {
  require_transform(u);
  const std::size_t n = u.size();
  std::vector<double> inner(n), outer(n), n_u(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lg = std::log1p(u[i]);
    inner[i] = -std::expm1(0.5 * alpha * lg) * flux.w[i];
  }
  kernels::parallel::apply_stencil(u.grid()->second_difference(), inner, outer);
  for (std::size_t i = 0; i < n; ++i) {
    const double lg = std::log1p(u[i]);
    const double p32 = std::exp(1.5 * lg);
    n_u[i] = -std::expm1(1.5 * lg) * flux.Lu[i] + p32 * outer[i];
  }
  return GridField(u.grid(), std::move(n_u));
}

GridField nonlinear_rhs(const GridField& u, double alpha) {
  require_transform(u);
  return nonlinear_rhs(u, flux_operator(u, alpha), alpha);
}

NormReport nonlinear_estimate_audit(const GridField& u, double alpha) {
  const double e = 3.0 * alpha - 1.0;
  std::map<std::string, double> params{{"alpha", alpha}};
  if (u.max_abs() > 0.5) {
    NormReport r;
    r.name = "est-nv";
    r.skipped = true;
    r.parameters = params;
    r.note = "smallness sup|u| <= 1/2 violated";
    return r;
  }
  const auto flux = flux_operator(u, alpha);
  const auto f = nonlinear_rhs(u, flux, alpha);
  const double A = norm_A(u);
  const double B = flux.energy_B;
  const double C = quadrature_dot(flux.Lu, flux.Lu);
  const double lhs = quadrature_dot(f, f);
  double rhs = 0.0;
  if (A > 0.0 && B > 0.0) {
    rhs = std::pow(A, 2.0 * (alpha - 1.0) / e) * std::pow(B, 2.0 / e) * C +
          std::pow(A, 4.0 * (alpha - 1.0) / e) * std::pow(B, 4.0 / e) * C;
  }
  params["A"] = A;
  params["B"] = B;
  params["C"] = C;
  return make_report("est-nv", lhs, rhs, std::move(params));
}

}  // namespace tfe
