#include "tfe/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tfe {

namespace {

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

}  // namespace

void Parameters::validate() const {
  require(std::isfinite(alpha) && alpha > 2.0, "alpha",
          "must satisfy alpha > 2 (strongly shear-thinning regime required for existence)");
  require(std::isfinite(h) && h > 0.0, "h", "time step must be positive");
  require(std::isfinite(T) && T > 0.0, "T", "final time must be positive");
  require(std::isfinite(L) && L > 0.0, "L", "domain length must be positive");
  require(n_cells >= 8, "n_cells", "must be at least 8");
  require(std::isfinite(grading) && grading >= 1.0, "grading", "must be >= 1");
  require(std::isfinite(eps_reg) && eps_reg >= 0.0 && eps_reg < 1e-6, "eps_reg",
          "must lie in [0, 1e-6) so the regularization never dominates");
  require(std::isfinite(tol_newton) && tol_newton > 0.0, "tol_newton", "must be positive");
  require(std::isfinite(tol_fit) && tol_fit > 0.0, "tol_fit", "must be positive");
  require(fit_window >= 2, "fit_window", "must be at least 2");
  require(fit_window <= n_cells / 4, "fit_window", "must not exceed n_cells/4");
}

Grid::Grid(double L, double grading, std::vector<double> nodes)
    : L_(L), grading_(grading), nodes_(std::move(nodes)) {
  const std::size_t n = nodes_.size();
  gaps_.resize(n + 1);
  gaps_[0] = nodes_[0];
  for (std::size_t i = 1; i < n; ++i) gaps_[i] = nodes_[i] - nodes_[i - 1];
  gaps_[n] = L_ - nodes_[n - 1];

  weights_.resize(n);
  d2_.lo.resize(n);
  d2_.di.resize(n);
  d2_.up.resize(n);
  d1_.lo.resize(n);
  d1_.di.resize(n);
  d1_.up.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h1 = gaps_[i];
    const double h2 = gaps_[i + 1];
    const double s = h1 + h2;
    weights_[i] = 0.5 * s;
    d2_.lo[i] = 2.0 / (h1 * s);
    d2_.di[i] = -2.0 / (h1 * h2);
    d2_.up[i] = 2.0 / (h2 * s);
    d1_.lo[i] = -h2 / (h1 * s);
    d1_.di[i] = (h2 - h1) / (h1 * h2);
    d1_.up[i] = h1 / (h2 * s);
  }
}

GridPtr Grid::graded(double L, int n, double grading) {
  if (n < 3) throw NumericalError("grid needs at least 3 nodes");
  if (!(L > 0.0) || !(grading >= 1.0)) throw ConfigError("grid: need L > 0 and grading >= 1");
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) x[i] = L * std::pow((i + 0.5) / n, grading);
  for (int i = 1; i < n; ++i) {
    if (!(x[i] > x[i - 1])) throw NumericalError("grid nodes not strictly increasing");
  }
  return GridPtr(new Grid(L, grading, std::move(x)));
}

GridPtr make_graded_grid(const Parameters& params) {
  if (params.n_cells < 8) throw ConfigError("n_cells: must be at least 8");
  return Grid::graded(params.L, params.n_cells, params.grading);
}

GridField::GridField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw NumericalError("GridField without grid");
  if (values_.size() != grid_->size()) {
    std::ostringstream os;
    os << "GridField length " << values_.size() << " does not match grid size " << grid_->size();
    throw NumericalError(os.str());
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      std::ostringstream os;
      os << "non-finite field value at node " << i << " (x = " << grid_->nodes()[i] << ")";
      throw NumericalError(os.str());
    }
  }
}

GridField GridField::zeros(GridPtr grid) {
  const std::size_t n = grid->size();
  return GridField(std::move(grid), std::vector<double>(n, 0.0));
}

double GridField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double GridField::min() const { return *std::min_element(values_.begin(), values_.end()); }

double g_alpha(double v, double alpha) {
  if (!std::isfinite(v) || !std::isfinite(alpha)) throw NumericalError("g_alpha: non-finite input");
  if (v == 0.0) return 0.0;
  return std::pow(std::abs(v), alpha - 1.0) * v;
}

double g_alpha_inverse(double a, double alpha) {
  if (!std::isfinite(a) || !std::isfinite(alpha)) {
    throw NumericalError("g_alpha_inverse: non-finite input");
  }
  if (a == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(a), 1.0 / alpha), a);
}

}  // namespace tfe
