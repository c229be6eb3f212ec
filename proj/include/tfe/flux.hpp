#pragma once

#include <span>
#include <vector>

#include "tfe/core_model.hpp"
#include "tfe/weighted_calculus.hpp"

namespace tfe {

/// The discrete flux operator at one state.
struct FluxAssembly {
  GridField w;        ///< x^(alpha+2) g_alpha(D^2 u)
  GridField Lu;       ///< quadrature-weighted gradient of energy_B / (alpha+1)
  double energy_B;    ///< sum_i q_i x_i^(alpha+2) |D^2 u|_i^(alpha+1)
};

/// Scratch buffers for repeated flux evaluations on one grid.
struct FluxWorkspace {
  std::vector<double> d2u, w, density, lu;
  explicit FluxWorkspace(std::size_t n = 0) : d2u(n), w(n), density(n), lu(n) {}
};

/// Caches the weight x^(alpha+2) for one (grid, alpha) pair and evaluates
/// the flux operator on raw node arrays. Used in the Newton inner loop.
class FluxModel {
 public:
  FluxModel(GridPtr grid, double alpha);

  const GridPtr& grid() const { return grid_; }
  double alpha() const { return alpha_; }
  std::span<const double> weight() const { return xw_; }

  /// Fills d2u, w, density and lu; returns energy_B.
  double evaluate(std::span<const double> u, FluxWorkspace& ws) const;

  /// energy_B only (d2u, w, density are overwritten).
  double energy(std::span<const double> u, FluxWorkspace& ws) const;

  FluxAssembly assemble(const GridField& u) const;

 private:
  GridPtr grid_;
  double alpha_;
  std::vector<double> xw_;
};

FluxAssembly flux_operator(const GridField& u, double alpha);

/// Higher-order right-hand side
///   N(u) = (1-(1+u)^{3/2}) L(u) + (1+u)^{3/2} D^2[(1-(1+u)^{alpha/2}) w].
/// Throws NumericalError if min(1+u) <= 0.
GridField nonlinear_rhs(const GridField& u, double alpha);
GridField nonlinear_rhs(const GridField& u, const FluxAssembly& flux, double alpha);

/// Compares int N(u)^2 with A^{2(a-1)/(3a-1)} B^{2/(3a-1)} C + A^{4(a-1)/(3a-1)} B^{4/(3a-1)} C.
/// Skipped (flagged) when sup|u| > 1/2.
NormReport nonlinear_estimate_audit(const GridField& u, double alpha);

}  // namespace tfe
