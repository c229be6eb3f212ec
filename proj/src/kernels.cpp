#include "tfe/kernels.hpp"

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tfe::kernels {

namespace {

inline double stencil_row(const Grid::Stencil& s, std::span<const double> v, std::ptrdiff_t i,
                          std::ptrdiff_t n) {
  double r = s.di[i] * v[i];
  if (i > 0) r += s.lo[i] * v[i - 1];
  if (i + 1 < n) r += s.up[i] * v[i + 1];
  return r;
}

inline double stencil_column(const Grid::Stencil& s, std::span<const double> v, std::ptrdiff_t k,
                             std::ptrdiff_t n) {
  double r = s.di[k] * v[k];
  if (k > 0) r += s.up[k - 1] * v[k - 1];
  if (k + 1 < n) r += s.lo[k + 1] * v[k + 1];
  return r;
}

inline double weighted_column(const Grid::Stencil& s, std::span<const double> q,
                              std::span<const double> w, std::ptrdiff_t k, std::ptrdiff_t n) {
  double r = s.di[k] * q[k] * w[k];
  if (k > 0) r += s.up[k - 1] * q[k - 1] * w[k - 1];
  if (k + 1 < n) r += s.lo[k + 1] * q[k + 1] * w[k + 1];
  return r / q[k];
}

inline void flux_node(double xw, double v, double alpha, double& w, double& density) {
  const double gv = v == 0.0 ? 0.0 : std::pow(std::abs(v), alpha - 1.0) * v;
  w = xw * gv;
  density = w * v;
}

inline double curvature_weight(std::span<const double> q, std::span<const double> xw,
                               std::span<const double> d2u, double alpha, double h,
                               double eps_reg, std::ptrdiff_t i) {
  const double v = d2u[i];
  const double m = std::pow(v * v + eps_reg * eps_reg, 0.5 * (alpha - 1.0));
  return h * alpha * q[i] * xw[i] * m;
}

inline void hessian_node(const Grid::Stencil& s, std::span<const double> q,
                         std::span<const double> c, std::ptrdiff_t k, std::ptrdiff_t n,
                         PentaBands& H) {
  double d0 = q[k] + c[k] * s.di[k] * s.di[k];
  if (k > 0) d0 += c[k - 1] * s.up[k - 1] * s.up[k - 1];
  if (k + 1 < n) d0 += c[k + 1] * s.lo[k + 1] * s.lo[k + 1];
  H.d0[k] = d0;
  H.d1[k] = k + 1 < n ? c[k] * s.di[k] * s.up[k] + c[k + 1] * s.lo[k + 1] * s.di[k + 1] : 0.0;
  H.d2[k] = k + 2 < n ? c[k + 1] * s.lo[k + 1] * s.up[k + 1] : 0.0;
}

}  // namespace

namespace serial {

void apply_stencil(const Grid::Stencil& s, std::span<const double> v, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(v.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = stencil_row(s, v, i, n);
}

void apply_stencil_transpose(const Grid::Stencil& s, std::span<const double> v,
                             std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(v.size());
  for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = stencil_column(s, v, k, n);
}

void flux_potential(std::span<const double> xw, std::span<const double> d2u, double alpha,
                    std::span<double> w, std::span<double> density) {
  for (std::size_t i = 0; i < d2u.size(); ++i) flux_node(xw[i], d2u[i], alpha, w[i], density[i]);
}

void gradient_assembly(const Grid::Stencil& s, std::span<const double> q,
                       std::span<const double> w, std::span<double> lu) {
  const auto n = static_cast<std::ptrdiff_t>(w.size());
  for (std::ptrdiff_t k = 0; k < n; ++k) lu[k] = weighted_column(s, q, w, k, n);
}

void hessian_bands(const Grid::Stencil& s, std::span<const double> q, std::span<const double> xw,
                   std::span<const double> d2u, double alpha, double h, double eps_reg,
                   PentaBands& H) {
  const auto n = static_cast<std::ptrdiff_t>(d2u.size());
  std::vector<double> c(static_cast<std::size_t>(n));
  for (std::ptrdiff_t i = 0; i < n; ++i) c[i] = curvature_weight(q, xw, d2u, alpha, h, eps_reg, i);
  H = PentaBands(static_cast<std::size_t>(n));
  for (std::ptrdiff_t k = 0; k < n; ++k) hessian_node(s, q, c, k, n, H);
}

double weighted_sum(std::span<const double> q, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += q[i] * v[i];
  return s;
}

double weighted_dot(std::span<const double> q, std::span<const double> a,
                    std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += q[i] * a[i] * b[i];
  return s;
}

}  // namespace serial

namespace parallel {

void apply_stencil(const Grid::Stencil& s, std::span<const double> v, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = stencil_row(s, v, i, n);
}

void apply_stencil_transpose(const Grid::Stencil& s, std::span<const double> v,
                             std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = stencil_column(s, v, k, n);
}

void flux_potential(std::span<const double> xw, std::span<const double> d2u, double alpha,
                    std::span<double> w, std::span<double> density) {
  const auto n = static_cast<std::ptrdiff_t>(d2u.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) flux_node(xw[i], d2u[i], alpha, w[i], density[i]);
}

void gradient_assembly(const Grid::Stencil& s, std::span<const double> q,
                       std::span<const double> w, std::span<double> lu) {
  const auto n = static_cast<std::ptrdiff_t>(w.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) lu[k] = weighted_column(s, q, w, k, n);
}

void hessian_bands(const Grid::Stencil& s, std::span<const double> q, std::span<const double> xw,
                   std::span<const double> d2u, double alpha, double h, double eps_reg,
                   PentaBands& H) {
  const auto n = static_cast<std::ptrdiff_t>(d2u.size());
  std::vector<double> c(static_cast<std::size_t>(n));
  if (H.size() != static_cast<std::size_t>(n)) H = PentaBands(static_cast<std::size_t>(n));
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      c[i] = curvature_weight(q, xw, d2u, alpha, h, eps_reg, i);
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) hessian_node(s, q, c, k, n, H);
  }
}

namespace {

template <class Term>
double blocked_sum(std::size_t n, Term term) {
  const std::size_t nblocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(nblocks, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(nblocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[b] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double weighted_sum(std::span<const double> q, std::span<const double> v) {
  return blocked_sum(v.size(), [&](std::size_t i) { return q[i] * v[i]; });
}

double weighted_dot(std::span<const double> q, std::span<const double> a,
                    std::span<const double> b) {
  return blocked_sum(a.size(), [&](std::size_t i) { return q[i] * a[i] * b[i]; });
}

}  // namespace parallel

bool solve_pentadiagonal_spd(const PentaBands& H, std::span<const double> rhs,
                             std::span<double> x) {
  const std::size_t n = H.size();
  std::vector<double> d(n), l1(n, 0.0), l2(n, 0.0), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    double dk = H.d0[k];
    if (k >= 1) dk -= l1[k - 1] * l1[k - 1] * d[k - 1];
    if (k >= 2) dk -= l2[k - 2] * l2[k - 2] * d[k - 2];
    if (!(dk > 0.0) || !std::isfinite(dk)) return false;
    d[k] = dk;
    if (k + 1 < n) {
      double t = H.d1[k];
      if (k >= 1) t -= l2[k - 1] * l1[k - 1] * d[k - 1];
      l1[k] = t / dk;
    }
    if (k + 2 < n) l2[k] = H.d2[k] / dk;
  }
  for (std::size_t k = 0; k < n; ++k) {
    double t = rhs[k];
    if (k >= 1) t -= l1[k - 1] * y[k - 1];
    if (k >= 2) t -= l2[k - 2] * y[k - 2];
    y[k] = t;
  }
  for (std::size_t k = 0; k < n; ++k) y[k] /= d[k];
  for (std::size_t kk = n; kk-- > 0;) {
    double t = y[kk];
    if (kk + 1 < n) t -= l1[kk] * x[kk + 1];
    if (kk + 2 < n) t -= l2[kk] * x[kk + 2];
    x[kk] = t;
  }
  return true;
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace tfe::kernels
