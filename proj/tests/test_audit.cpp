#include <doctest.h>

#include <cmath>
#include <random>

#include "tfe/inequality_audit.hpp"

using namespace tfe;

namespace {

AuditSpec spec(std::string e) { return AuditSpec{std::move(e)}; }

AuditSpec spec_beta(std::string e, double beta) {
  AuditSpec s{std::move(e)};
  s.beta = beta;
  return s;
}

double bump(double x) { return x * x * std::exp(-x); }

}  // namespace

TEST_CASE("quintic B-spline") {
  CHECK(quintic_bspline(-0.1) == 0.0);
  CHECK(quintic_bspline(6.1) == 0.0);
  CHECK(quintic_bspline(3.0) == doctest::Approx(66.0 / 120.0).epsilon(1e-14));
  CHECK(quintic_bspline(1.0) == doctest::Approx(1.0 / 120.0).epsilon(1e-14));
  for (double t : {0.3, 1.7, 2.2}) CHECK(quintic_bspline(t) == doctest::Approx(quintic_bspline(6.0 - t)));
  // partition of unity
  for (double t : {0.0, 0.25, 0.5, 0.9}) {
    double s = 0.0;
    for (int k = -6; k <= 6; ++k) s += quintic_bspline(t - k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("random splines are reproducible and compactly supported") {
  std::mt19937_64 r1(99), r2(99);
  for (int k = 0; k < 10; ++k) {
    const RandomSpline a(r1, 10.0), b(r2, 10.0);
    CHECK(a.support_begin() == b.support_begin());
    CHECK(a(3.3) == b(3.3));
    CHECK(a.support_begin() > 0.0);
    CHECK(a.support_end() < 10.0);
    CHECK(a(a.support_begin() * 0.5) == 0.0);
    CHECK(a(0.5 * (a.support_end() + 10.0)) == 0.0);
  }
  std::mt19937_64 r3(5);
  CHECK(uniform01(r3) >= 0.0);
  CHECK_THROWS_AS(RandomSpline(0.0, 1.0, {1.0}), ConfigError);
}

TEST_CASE("catalog names and errors") {
  const auto g = Grid::graded(10.0, 512, 2.0);
  const auto u = GridField::sample(g, [](double x) { return 0.01 * bump(x); });
  for (const auto& name : audit_catalog()) {
    if (name == "con-lem-sup-uxx") continue;
    CHECK_NOTHROW(inequality_audit(u, 3.0, spec(name)));
  }
  CHECK_THROWS_AS(inequality_audit(u, 3.0, spec("no-such-entry")), ConfigError);
  try {
    inequality_audit(u, 3.0, spec_beta("weight-xu", 0.5));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    CHECK(m.find("weight-xu") != std::string::npos);
    CHECK(m.find("admissible range") != std::string::npos);
  }
  CHECK_THROWS_AS(inequality_audit(u, 3.0, spec_beta("weight-xu'", 0.1)), ConfigError);
  CHECK_THROWS_AS(inequality_audit(u, 3.0, spec_beta("sup-uxx", 0.0)), ConfigError);
  CHECK_THROWS_AS(inequality_audit(u, 3.0, spec_beta("sup-w-alt", -2.0)), ConfigError);
  AuditSpec lp{"weight-xu-lp"};
  lp.p = 1.5;
  CHECK_THROWS_AS(inequality_audit(u, 3.0, lp), ConfigError);
  // alpha = 2.5 > 2 is admissible for con-lem-sup-uxx
  CHECK_NOTHROW(inequality_audit(u, 2.5, spec("con-lem-sup-uxx")));
}

TEST_CASE("zero field is degenerate for every entry") {
  const auto g = Grid::graded(10.0, 256, 2.0);
  const auto z = GridField::zeros(g);
  for (const auto& name : audit_catalog()) {
    const auto r = inequality_audit(z, 3.0, spec(name));
    CHECK_MESSAGE(r.degenerate, name);
    CHECK(r.ratio == 0.0);
  }
}

TEST_CASE("B2 identity holds to rounding") {
  const auto g = Grid::graded(10.0, 2048, 2.0);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 5; ++k) {
    const RandomSpline s(rng, 10.0);
    const auto u = GridField::sample(g, [&](double x) { return 0.1 * s(x); });
    CHECK(inequality_audit(u, 3.0, spec("B2-identity")).ratio <= 1e-8);
  }
}

TEST_CASE("weight-xu ratio is invariant under amplitude and dilation") {
  const auto g = Grid::graded(10.0, 4096, 2.0);
  const RandomSpline s(0.5, 0.4, {0.3, -0.8, 1.0, 0.2});
  const double base =
      inequality_audit(GridField::sample(g, [&](double x) { return s(x); }), 3.0, spec("weight-xu")).ratio;
  REQUIRE(base > 0.0);
  for (double lam : {0.5, 2.0}) {
    const auto amp = GridField::sample(g, [&](double x) { return lam * s(x); });
    CHECK(inequality_audit(amp, 3.0, spec("weight-xu")).ratio == doctest::Approx(base).epsilon(1e-10));
    const auto dil = GridField::sample(g, [&](double x) { return s(lam * x); });
    CHECK(inequality_audit(dil, 3.0, spec("weight-xu")).ratio == doctest::Approx(base).epsilon(1e-2));
  }
}

TEST_CASE("hardy ratios are stable under refinement") {
  double r[3];
  int k = 0;
  for (int n : {1024, 2048, 4096}) {
    const auto u = GridField::sample(Grid::graded(40.0, n, 2.0), bump);
    r[k++] = inequality_audit(u, 3.0, spec("hardy-1")).ratio;
  }
  CHECK(std::abs(r[1] / r[0] - 1.0) <= 0.05);
  CHECK(std::abs(r[2] / r[1] - 1.0) <= 0.05);
}

TEST_CASE("sup-w-alt at the switch point evaluates both branches") {
  const auto g = Grid::graded(10.0, 1024, 2.0);
  const auto u = GridField::sample(g, [](double x) { return 0.01 * bump(x); });
  const auto r = inequality_audit(u, 3.0, spec_beta("sup-w-alt", -1.0));
  CHECK(r.parameters.count("lhs_delta1") == 1);
  CHECK(r.parameters.count("ratio_delta1") == 1);
  CHECK(r.parameters.at("delta") == 0.0);
  const auto r2 = inequality_audit(u, 3.0, spec_beta("sup-w-alt", -1.2));
  CHECK(r2.parameters.at("delta") == 1.0);
  CHECK(r2.parameters.count("lhs_delta1") == 0);
}

TEST_CASE("audit study is deterministic and ordered") {
  AuditStudyOptions o;
  o.count = 6;
  o.n_cells = 512;
  o.refinements = 1;
  o.seed = 4;
  const auto a = run_audit_study(o);
  const auto b = run_audit_study(o);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK(a.rows.size() == 2 * 6 * default_audit_entries(3.0).size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].report.lhs == b.rows[i].report.lhs);
    CHECK(a.rows[i].report.rhs == b.rows[i].report.rhs);
    if (i > 0) {
      const auto& p = a.rows[i - 1];
      const auto& q = a.rows[i];
      CHECK(std::make_pair(p.refinement_level, p.field) <= std::make_pair(q.refinement_level, q.field));
    }
  }
  CHECK(a.summaries.size() == default_audit_entries(3.0).size());
  for (const auto& s : a.summaries) {
    CHECK(s.all_finite);
    CHECK(s.max_ratio.size() == 2);
  }
}
