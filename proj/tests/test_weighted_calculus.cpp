#include <doctest.h>

#include <cmath>

#include "tfe/config.hpp"
#include "tfe/core_model.hpp"
#include "tfe/weighted_calculus.hpp"

using namespace tfe;

namespace {

double max_rel_error_in(const GridField& approx, double lo, double hi, double (*exact)(double)) {
  const auto x = approx.grid()->nodes();
  double err = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo || x[i] > hi) continue;
    const double e = exact(x[i]);
    err = std::max(err, std::abs(approx[i] - e) / std::abs(e));
  }
  return err;
}

double bump(double x) { return x * x * std::exp(-x); }

}  // namespace

TEST_CASE("second derivative exact on quadratics away from the far ghost") {
  const auto g = Grid::graded(1.0, 256, 2.0);
  const auto d2 = second_derivative(GridField::sample(g, [](double x) { return x * x; }));
  for (std::size_t i = 0; i + 1 < g->size(); ++i) CHECK(d2[i] == doctest::Approx(2.0).epsilon(1e-8));

  const auto lin = second_derivative(GridField::sample(g, [](double x) { return 0.7 * x; }));
  for (std::size_t i = 0; i + 1 < g->size(); ++i) CHECK(std::abs(lin[i]) <= 1e-7);

  const auto d1 = first_derivative(GridField::sample(g, [](double x) { return x * x; }));
  for (std::size_t i = 0; i + 1 < g->size(); ++i) {
    CHECK(d1[i] == doctest::Approx(2.0 * g->nodes()[i]).epsilon(1e-9));
  }
}

TEST_CASE("second derivative of x^(2/3) converges at first order or better") {
  double prev = 0.0;
  for (int n : {512, 1024, 2048}) {
    const auto g = Grid::graded(1.0, n, 2.0);
    const auto d2 = second_derivative(GridField::sample(g, [](double x) { return std::cbrt(x * x); }));
    const double err = max_rel_error_in(d2, 0.05, 0.5, +[](double x) {
      return -2.0 / 9.0 * std::pow(x, -4.0 / 3.0);
    });
    if (prev > 0.0) CHECK(std::log2(prev / err) >= 1.0);
    prev = err;
  }
}

TEST_CASE("weighted integrals") {
  const auto g = Grid::graded(40.0, 2048, 2.0);
  CHECK(weighted_integral(GridField::zeros(g), 0.0, 2.0) == 0.0);

  const auto one = GridField::sample(g, [](double) { return 1.0; });
  double qsum = 0.0;
  for (double q : g->weights()) qsum += q;
  CHECK(weighted_integral(one, 0.0, 2.0) == doctest::Approx(qsum).epsilon(1e-14));

  // int_0^inf (x e^-x)^2 dx = 1/4
  const auto f = GridField::sample(g, [](double x) { return x * std::exp(-x); });
  CHECK(std::abs(weighted_integral(f, 0.0, 2.0) - 0.25) <= 1e-6);
  // int x^(nu p) |f|^p with nu = 1, p = 1: int x^2 e^-x = 2
  CHECK(std::abs(weighted_integral(f, 1.0, 1.0) - 2.0) <= 1e-5);
  CHECK(norm_A(f) == doctest::Approx(weighted_integral(f, 0.0, 2.0)).epsilon(1e-15));
}

TEST_CASE("A, B, C of x^2 e^-x against a fine-grid oracle") {
  const double alpha = 3.0;
  const auto fine = GridField::sample(Grid::graded(40.0, 1 << 16, 2.0), bump);
  const double A_ref = norm_A(fine), B_ref = norm_B(fine, alpha);
  // C nests two second differences, so roundoff grows like dx^-4; beyond
  // 2^14 nodes it outweighs the discretization error.
  const double C_ref = norm_C(GridField::sample(Grid::graded(40.0, 1 << 14, 2.0), bump), alpha);
  // closed form of A = int x^4 e^-2x = 24/32
  CHECK(A_ref == doctest::Approx(0.75).epsilon(1e-8));
  const auto u = GridField::sample(Grid::graded(40.0, 2048, 2.0), bump);
  CHECK(std::abs(norm_A(u) / A_ref - 1.0) <= 1e-4);
  CHECK(std::abs(norm_B(u, alpha) / B_ref - 1.0) <= 1e-4);
  CHECK(std::abs(norm_C(u, alpha) / C_ref - 1.0) <= 1e-3);
  CHECK(B_ref > 0.0);
  CHECK(C_ref > 0.0);
}

TEST_CASE("linear data has vanishing second derivative except at the truncation") {
  const auto g = Grid::graded(10.0, 512, 2.0);
  const auto u = GridField::sample(g, [](double x) { return 0.01 * x; });
  const auto w = flux_potential(u, 3.0);
  for (std::size_t i = 0; i + 1 < g->size(); ++i) CHECK(std::abs(w[i]) <= 1e-12 * std::pow(g->nodes()[i], 5));
  CHECK(norm_A(u) > 0.0);
}

TEST_CASE("contact coefficients") {
  const double alpha = 3.0;
  SUBCASE("flat near the origin") {
    const auto g = Grid::graded(10.0, 1024, 2.0);
    const auto u = GridField::sample(g, [](double x) {
      return x < 1.0 ? 0.0 : 1e-3 * std::pow(x - 1.0, 6) * std::exp(-x);
    });
    const auto cc = extract_contact_coefficients(u, alpha, 16, 1e-2);
    CHECK(cc.a == 0.0);
    CHECK(cc.c == 0.0);
  }
  SUBCASE("kernel profile recovers c0") {
    const double c0 = 0.1;
    const auto g = Grid::graded(1.0, 2048, 2.0);
    const auto u = GridField::sample(g, [&](double x) {
      return c0 * std::pow(x, kernel_exponent(alpha)) * smooth_cutoff(x, 0.5, 0.9);
    });
    const auto cc = extract_contact_coefficients(u, alpha, 16, 1e-2);
    CHECK(cc.resolved);
    CHECK(cc.a == doctest::Approx(g_alpha(-2.0 * c0 / 9.0, alpha)).epsilon(1e-3));
    CHECK(std::abs(cc.c - c0) <= 1e-3 * c0);
  }
  SUBCASE("exactly linear flux potential") {
    const auto g = Grid::graded(1.0, 256, 2.0);
    const auto w = GridField::sample(g, [](double x) { return -0.02 * x; });
    const auto cc = fit_contact_slope(w, alpha, 16, 1e-2);
    CHECK(cc.fit_residual <= 1e-12);
    CHECK(cc.a == doctest::Approx(-0.02).epsilon(1e-13));
    CHECK(cc.c == doctest::Approx(alpha * alpha / (1 - alpha) * g_alpha_inverse(-0.02, alpha)).epsilon(1e-13));
    CHECK(cc.window == 16);
  }
  SUBCASE("smooth data: a tends to zero under refinement") {
    double prev = 1e300;
    for (int n : {256, 512, 1024}) {
      const auto u = GridField::sample(Grid::graded(10.0, n, 2.0), bump);
      const double a = std::abs(extract_contact_coefficients(u, alpha, 16, 1e-2).a);
      CHECK(a < prev);
      prev = a;
    }
    CHECK(prev < 1e-12);
  }
}

TEST_CASE("make_report") {
  const auto r = make_report("x", 0.0, 0.0);
  CHECK(r.degenerate);
  CHECK(r.ratio == 0.0);
  const auto s = make_report("y", 1.0, 4.0, {{"beta", 0.5}});
  CHECK_FALSE(s.degenerate);
  CHECK(s.ratio == 0.25);
  CHECK(s.parameters.at("beta") == 0.5);
  CHECK(std::isinf(make_report("z", 1.0, 0.0).ratio));
}
