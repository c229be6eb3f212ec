#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tfe/kernels.hpp"

using namespace tfe;
namespace K = tfe::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                  double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<double> v(n);
  for (double& e : v) e = U(rng);
  return v;
}

}  // namespace

TEST_CASE("parallel elementwise kernels equal the serial reference bit for bit") {
  const auto g = Grid::graded(10.0, 5000, 2.0);
  const std::size_t n = g->size();
  const auto& s = g->second_difference();
  const auto v = random_vector(n, 1);
  const auto xw = random_vector(n, 2, 0.0, 3.0);
  std::vector<double> a(n), b(n), c(n), d(n);

  K::serial::apply_stencil(s, v, a);
  K::parallel::apply_stencil(s, v, b);
  CHECK(a == b);
  K::serial::apply_stencil_transpose(s, v, a);
  K::parallel::apply_stencil_transpose(s, v, b);
  CHECK(a == b);
  K::serial::flux_potential(xw, v, 3.0, a, c);
  K::parallel::flux_potential(xw, v, 3.0, b, d);
  CHECK(a == b);
  CHECK(c == d);
  K::serial::gradient_assembly(s, g->weights(), v, a);
  K::parallel::gradient_assembly(s, g->weights(), v, b);
  CHECK(a == b);

  K::PentaBands H1(n), H2(n);
  K::serial::hessian_bands(s, g->weights(), xw, v, 3.0, 1e-3, 1e-10, H1);
  K::parallel::hessian_bands(s, g->weights(), xw, v, 3.0, 1e-3, 1e-10, H2);
  CHECK(H1.d0 == H2.d0);
  CHECK(H1.d1 == H2.d1);
  CHECK(H1.d2 == H2.d2);
}

TEST_CASE("parallel reductions agree with serial and do not depend on the thread count") {
  const std::size_t n = 10007;
  const auto q = random_vector(n, 3, 0.0, 1.0);
  const auto a = random_vector(n, 4);
  const auto b = random_vector(n, 5);
  const double ser = K::serial::weighted_dot(q, a, b);
  const double par = K::parallel::weighted_dot(q, a, b);
  CHECK(par == doctest::Approx(ser).epsilon(1e-12));
  CHECK(K::parallel::weighted_sum(q, a) == doctest::Approx(K::serial::weighted_sum(q, a)).epsilon(1e-12));
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  for (int t : {1, 2, 3, 7}) {
    omp_set_num_threads(t);
    CHECK(K::parallel::weighted_dot(q, a, b) == par);
  }
  omp_set_num_threads(saved);
#endif
}

TEST_CASE("pentadiagonal LDL^T solve") {
  const std::size_t n = 200;
  K::PentaBands H(n);
  const auto r1 = random_vector(n, 6);
  const auto r2 = random_vector(n, 7);
  for (std::size_t i = 0; i < n; ++i) {
    H.d0[i] = 6.0 + std::abs(r1[i]);
    if (i + 1 < n) H.d1[i] = r1[i];
    if (i + 2 < n) H.d2[i] = 0.5 * r2[i];
  }
  const auto x_true = random_vector(n, 8);
  std::vector<double> rhs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    rhs[i] += H.d0[i] * x_true[i];
    if (i + 1 < n) {
      rhs[i] += H.d1[i] * x_true[i + 1];
      rhs[i + 1] += H.d1[i] * x_true[i];
    }
    if (i + 2 < n) {
      rhs[i] += H.d2[i] * x_true[i + 2];
      rhs[i + 2] += H.d2[i] * x_true[i];
    }
  }
  std::vector<double> x(n);
  REQUIRE(K::solve_pentadiagonal_spd(H, rhs, x));
  for (std::size_t i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(x_true[i]).epsilon(1e-12));

  K::PentaBands bad(3);
  bad.d0 = {1.0, -1.0, 1.0};
  std::vector<double> y(3);
  CHECK_FALSE(K::solve_pentadiagonal_spd(bad, std::vector<double>{1, 1, 1}, y));
}

TEST_CASE("thread_count is positive") { CHECK(K::thread_count() >= 1); }
