#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfe {

/// Raised for invalid run configuration (bad parameter values, bad exponents,
/// malformed config files). The message names the offending key or constraint.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numerical state is unusable: NaN/Inf in a field, a
/// degenerate von-Mises transform, an undersized grid.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable run configuration. Times are in rescaled units.
struct Parameters {
  double alpha = 3.0;
  double h = 1e-3;
  double T = 1.0;
  double L = 40.0;
  int n_cells = 2048;
  double grading = 2.0;
  double eps_reg = 1e-10;
  double tol_newton = 1e-9;
  double tol_fit = 1e-2;
  int fit_window = 16;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;
};

/// Graded cell-centred grid on (0, L). Nodes never touch x = 0 or x = L;
/// both endpoints act as ghost positions where fields vanish.
///
/// The quadrature weight of node i is (x_{i+1} - x_{i-1}) / 2 with the
/// ghosts x_{-1} = 0 and x_n = L, i.e. the composite trapezoid rule on
/// [0, L] for fields that vanish at both ghosts. With these weights the
/// three-point second difference is self-adjoint, which is what makes the
/// discrete energy identities exact.
class Grid {
 public:
  /// Coefficients of a three-point row: lo*v[i-1] + di*v[i] + up*v[i+1],
  /// with v[-1] = v[n] = 0.
  struct Stencil {
    std::vector<double> lo, di, up;
  };

  /// x_i = L * ((i + 1/2) / n)^grading. Requires n >= 3.
  static std::shared_ptr<const Grid> graded(double L, int n, double grading);

  std::size_t size() const { return nodes_.size(); }
  double length() const { return L_; }
  double x_min() const { return nodes_.front(); }
  double grading() const { return grading_; }

  std::span<const double> nodes() const { return nodes_; }
  /// n + 1 gaps: x_0 - 0, x_1 - x_0, ..., L - x_{n-1}.
  std::span<const double> cell_widths() const { return gaps_; }
  std::span<const double> weights() const { return weights_; }

  const Stencil& second_difference() const { return d2_; }
  const Stencil& first_difference() const { return d1_; }

 private:
  Grid(double L, double grading, std::vector<double> nodes);

  double L_;
  double grading_;
  std::vector<double> nodes_;
  std::vector<double> gaps_;
  std::vector<double> weights_;
  Stencil d2_;
  Stencil d1_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Grid for a validated parameter set (n_cells >= 8 enforced).
GridPtr make_graded_grid(const Parameters& params);

/// One scalar function sampled at the grid nodes. Values are immutable and
/// always finite.
class GridField {
 public:
  GridField(GridPtr grid, std::vector<double> values);

  static GridField zeros(GridPtr grid);

  template <class F>
  static GridField sample(GridPtr grid, F&& f) {
    std::vector<double> v(grid->size());
    auto x = grid->nodes();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(x[i]);
    return GridField(std::move(grid), std::move(v));
  }

  const GridPtr& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vector() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  double max_abs() const;
  double min() const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// |v|^(alpha-1) v.
double g_alpha(double v, double alpha);

/// Inverse of g_alpha: |a|^(1/alpha - 1) a.
double g_alpha_inverse(double a, double alpha);

/// Exponent of the singular contact-line profile c x^beta, beta = (alpha-1)/alpha.
inline double kernel_exponent(double alpha) { return (alpha - 1.0) / alpha; }

}  // namespace tfe
