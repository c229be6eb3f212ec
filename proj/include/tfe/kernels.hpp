#pragma once

// Data-parallel node loops used by the flux assembly and the Newton solve.
//
// Every kernel exists twice: `serial::` is the plain reference loop kept for
// testing, `parallel::` is the OpenMP version the solver calls. Elementwise
// kernels produce bit-identical results in both. Reductions in `parallel::`
// sum fixed-size blocks and combine the block sums in index order, so their
// result does not depend on the thread count.

#include <cstddef>
#include <span>

#include "tfe/core_model.hpp"

namespace tfe::kernels {

/// Block length of deterministic reductions.
inline constexpr std::size_t kReductionBlock = 256;

/// Bands of a symmetric pentadiagonal matrix: d0[k] = H(k,k),
/// d1[k] = H(k,k+1), d2[k] = H(k,k+2). Trailing entries past the matrix are 0.
struct PentaBands {
  std::vector<double> d0, d1, d2;
  explicit PentaBands(std::size_t n = 0) : d0(n, 0.0), d1(n, 0.0), d2(n, 0.0) {}
  std::size_t size() const { return d0.size(); }
};

namespace serial {

/// out = S v with zero ghosts.
void apply_stencil(const Grid::Stencil& s, std::span<const double> v, std::span<double> out);

/// out = S^T v.
void apply_stencil_transpose(const Grid::Stencil& s, std::span<const double> v,
                             std::span<double> out);

/// w_i = xw_i * g_alpha(d2u_i); density_i = xw_i * |d2u_i|^(alpha+1).
void flux_potential(std::span<const double> xw, std::span<const double> d2u, double alpha,
                    std::span<double> w, std::span<double> density);

/// Lu_k = (S^T (q .* w))_k / q_k, the quadrature-weighted energy gradient.
void gradient_assembly(const Grid::Stencil& s, std::span<const double> q,
                       std::span<const double> w, std::span<double> lu);

/// H = diag(q) + h*alpha * S^T diag(q .* xw .* (d2u^2 + eps^2)^((alpha-1)/2)) S.
void hessian_bands(const Grid::Stencil& s, std::span<const double> q, std::span<const double> xw,
                   std::span<const double> d2u, double alpha, double h, double eps_reg,
                   PentaBands& H);

double weighted_sum(std::span<const double> q, std::span<const double> v);
double weighted_dot(std::span<const double> q, std::span<const double> a,
                    std::span<const double> b);

}  // namespace serial

namespace parallel {

void apply_stencil(const Grid::Stencil& s, std::span<const double> v, std::span<double> out);
void apply_stencil_transpose(const Grid::Stencil& s, std::span<const double> v,
                             std::span<double> out);
void flux_potential(std::span<const double> xw, std::span<const double> d2u, double alpha,
                    std::span<double> w, std::span<double> density);
void gradient_assembly(const Grid::Stencil& s, std::span<const double> q,
                       std::span<const double> w, std::span<double> lu);
void hessian_bands(const Grid::Stencil& s, std::span<const double> q, std::span<const double> xw,
                   std::span<const double> d2u, double alpha, double h, double eps_reg,
                   PentaBands& H);
double weighted_sum(std::span<const double> q, std::span<const double> v);
double weighted_dot(std::span<const double> q, std::span<const double> a,
                    std::span<const double> b);

}  // namespace parallel

/// Solves H x = rhs for symmetric positive definite pentadiagonal H by banded
/// LDL^T. Returns false if a pivot is not positive. Sequential by nature.
bool solve_pentadiagonal_spd(const PentaBands& H, std::span<const double> rhs,
                             std::span<double> x);

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int thread_count();

}  // namespace tfe::kernels
