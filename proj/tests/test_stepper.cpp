#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "tfe/flux.hpp"
#include "tfe/inequality_audit.hpp"
#include "tfe/stepper.hpp"
#include "tfe/weighted_calculus.hpp"

using namespace tfe;

namespace {

Parameters small_params(double L, int n, double h, double T) {
  Parameters p;
  p.L = L;
  p.n_cells = n;
  p.h = h;
  p.T = T;
  p.fit_window = std::min(16, n / 2);
  return p;
}

GridField bump_on(const GridPtr& g, double amp, double width) {
  return GridField::sample(g, [&](double x) {
    const double s = x / width;
    return amp * s * s * std::exp(-s);
  });
}

// Derivative-free oracle: compass search with step halving.
std::vector<double> compass_minimize(const StepProblem& pb, std::vector<double> x) {
  const auto g = pb.u_prev.grid();
  auto J = [&](const std::vector<double>& v) { return functional_J(GridField(g, v), pb); };
  double best = J(x);
  for (double step = 0.05; step > 1e-10; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        for (double sgn : {1.0, -1.0}) {
          auto y = x;
          y[i] += sgn * step;
          const double jy = J(y);
          if (jy < best) {
            best = jy;
            x = std::move(y);
            improved = true;
          }
        }
      }
    }
  }
  return x;
}

}  // namespace

TEST_CASE("functional_J") {
  const auto g = Grid::graded(40.0, 2048, 2.0);
  const auto zero = GridField::zeros(g);
  const auto pb0 = StepProblem::make(zero, zero, 1e-3, 3.0);
  CHECK(functional_J(zero, pb0) == 0.0);

  // f_tilde = 0: J is a sum of nonnegative terms
  std::mt19937_64 rng(41);
  for (int k = 0; k < 5; ++k) {
    const RandomSpline s(rng, 40.0);
    const auto u = GridField::sample(g, [&](double x) { return 0.1 * s(x); });
    CHECK(functional_J(u, pb0) >= 0.0);
  }

  // u_prev = x e^-x, f = 0, candidate u = u_prev: J = A/2 + h B/(alpha+1) - A
  const auto xe = GridField::sample(g, [](double x) { return x * std::exp(-x); });
  const auto pb = StepProblem::make(xe, zero, 1e-3, 3.0);
  const double expected = -0.5 * norm_A(xe) + 1e-3 / 4.0 * norm_B(xe, 3.0);
  CHECK(functional_J(xe, pb) == doctest::Approx(expected).epsilon(1e-12));
  // A -> 1/4 under refinement, so J -> -1/8 + O(h)
  CHECK(std::abs(functional_J(xe, pb) - (-0.125 + 1e-3 / 4.0 * norm_B(xe, 3.0))) <= 1e-6);
}

TEST_CASE("minimize_step on trivial data") {
  const auto g = Grid::graded(10.0, 256, 2.0);
  const auto zero = GridField::zeros(g);
  const auto out = minimize_step(StepProblem::make(zero, zero, 1e-3, 3.0));
  CHECK(out.converged);
  CHECK(out.u_next.max_abs() == 0.0);
  CHECK(out.el_residual == 0.0);
}

TEST_CASE("minimize_step agrees with a derivative-free oracle on a tiny grid") {
  const auto g = Grid::graded(1.0, 8, 2.0);
  const auto u_prev = GridField::sample(g, [](double x) { return 0.05 * std::sin(3.0 * x); });
  const auto f = GridField::sample(g, [](double x) { return 0.02 * x; });
  const auto pb = StepProblem::make(u_prev, f, 0.1, 3.0);
  NewtonOptions opt;
  opt.tol = 1e-12;
  const auto out = minimize_step(pb, opt);
  REQUIRE(out.converged);
  const auto oracle = compass_minimize(pb, u_prev.vector());
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(out.u_next[i] - oracle[i]) <= 1e-6);
  CHECK(out.J_value <= functional_J(GridField(g, oracle), pb) + 1e-15);
  CHECK(out.J_value <= functional_J(u_prev, pb));
}

TEST_CASE("minimizer does not depend on the warm start") {
  const auto g = Grid::graded(10.0, 512, 2.0);
  const auto u_prev = bump_on(g, 0.01, 0.5);
  const auto f = nonlinear_rhs(u_prev, 3.0);
  const auto pb = StepProblem::make(u_prev, f, 1e-2, 3.0);
  NewtonOptions opt;
  opt.tol = 1e-12;
  const auto a = minimize_step(pb, opt);
  const auto b = minimize_step(pb, opt, GridField::zeros(g));
  const auto c = minimize_step(pb, opt, bump_on(g, 0.02, 1.0));
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  REQUIRE(c.converged);
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(std::abs(a.u_next[i] - b.u_next[i]) <= 1e-8 * a.u_next.max_abs());
    CHECK(std::abs(a.u_next[i] - c.u_next[i]) <= 1e-8 * a.u_next.max_abs());
  }
  CHECK(euler_lagrange_residual(a.u_next, pb) == doctest::Approx(a.el_residual).epsilon(1e-12));
}

TEST_CASE("zero initial data stays zero") {
  const auto p = small_params(10.0, 128, 1e-2, 0.1);
  const auto traj = run_simulation(GridField::zeros(make_graded_grid(p)), p);
  REQUIRE(traj.completed());
  CHECK(traj.steps.size() == 11);
  CHECK(traj.final_u->max_abs() == 0.0);
  for (const auto& s : traj.steps) {
    CHECK(s.A == 0.0);
    CHECK(s.ledger_weak.holds(0.0));
    CHECK(s.ledger_max.holds(0.0));
  }
}

TEST_CASE("leading-order scheme dissipates exactly") {
  auto p = small_params(4.0, 512, 1e-3, 0.05);
  const auto u0 = bump_on(make_graded_grid(p), 0.01, 0.1);
  RunOptions opt;
  opt.leading_order_only = true;
  const auto traj = run_simulation(u0, p, opt);
  REQUIRE(traj.completed());
  const double A0 = traj.initial().A;
  for (const auto& s : traj.steps) {
    const double margin = (0.5 * A0 - 0.5 * s.A - s.sum_hB) / (0.5 * A0);
    CHECK(margin >= -1e-12);
    CHECK(s.ledger_weak.relative_violation() <= 1e-10);
  }
  CHECK(traj.last().A < A0);
}

TEST_CASE("full scheme keeps both ledgers") {
  auto p = small_params(4.0, 512, 1e-3, 0.05);
  const auto traj = run_simulation(bump_on(make_graded_grid(p), 0.01, 0.1), p);
  REQUIRE(traj.completed());
  for (std::size_t j = 1; j < traj.steps.size(); ++j) {
    const auto& s = traj.steps[j];
    CHECK(s.ledger_weak.relative_violation() <= 1e-10);
    CHECK(s.ledger_max.relative_violation() <= 1e-10);
    CHECK(s.el_residual <= p.tol_newton * std::max(1.0, std::sqrt(s.f_norm2)) * 1.0001);
  }
}

TEST_CASE("checkpoint restart reproduces the uninterrupted run") {
  const auto dir = std::filesystem::temp_directory_path() / "tfe_test_checkpoint";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "cp.json").string();

  auto p = small_params(4.0, 256, 2e-3, 0.04);
  const auto u0 = bump_on(make_graded_grid(p), 0.01, 0.1);
  const auto full = run_simulation(u0, p);
  REQUIRE(full.completed());

  auto half = p;
  half.T = 0.02;
  RunOptions opt;
  opt.checkpoint_path = path;
  const auto first = run_simulation(u0, half, opt);
  REQUIRE(first.completed());
  auto cp = read_checkpoint(path);
  CHECK(cp.step == 10);
  cp.params.T = 0.04;
  const auto second = resume_simulation(cp);
  REQUIRE(second.completed());
  CHECK(second.steps.front().step == 10);
  CHECK(second.last().step == full.last().step);
  CHECK(second.final_u->vector() == full.final_u->vector());
  for (const auto& s : second.steps) {
    const auto& r = full.steps[static_cast<std::size_t>(s.step)];
    CHECK(s.A == r.A);
    if (s.step == cp.step) continue;
    CHECK(s.ledger_weak.lhs == r.ledger_weak.lhs);
    CHECK(s.ledger_max.lhs == r.ledger_max.lhs);
    CHECK(s.sum_hB == r.sum_hB);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("read_checkpoint rejects malformed files") {
  const auto path = (std::filesystem::temp_directory_path() / "tfe_bad_cp.json").string();
  {
    std::ofstream(path) << "{\"format\": \"something-else\"}";
  }
  CHECK_THROWS(read_checkpoint(path));
  std::filesystem::remove(path);
  CHECK_THROWS(read_checkpoint(path));
}

TEST_CASE("failures are reported, not thrown") {
  SUBCASE("Newton budget exhausted") {
    auto p = small_params(4.0, 256, 1e-2, 0.05);
    p.tol_newton = 1e-16;
    RunOptions opt;
    opt.max_newton_iter = 1;
    const auto traj = run_simulation(bump_on(make_graded_grid(p), 0.01, 0.1), p, opt);
    REQUIRE_FALSE(traj.completed());
    CHECK(traj.failure->kind == "newton-not-converged");
    CHECK(traj.failure->step == 1);
  }
  SUBCASE("smallness lost") {
    auto p = small_params(4.0, 128, 1e-3, 0.01);
    RunOptions opt;
    opt.smallness_gate = std::numeric_limits<double>::max();
    const auto traj = run_simulation(bump_on(make_graded_grid(p), 6.0, 0.5), p, opt);
    REQUIRE_FALSE(traj.completed());
    CHECK(traj.failure->kind == "smallness-lost");
  }
  SUBCASE("oversized initial data is a configuration error") {
    auto p = small_params(4.0, 128, 1e-3, 0.01);
    CHECK_THROWS_AS(run_simulation(bump_on(make_graded_grid(p), 1.0, 0.5), p), ConfigError);
  }
  SUBCASE("grid mismatch") {
    auto p = small_params(4.0, 128, 1e-3, 0.01);
    const auto u0 = GridField::zeros(Grid::graded(4.0, 64, 2.0));
    CHECK_THROWS_AS(run_simulation(u0, p), ConfigError);
  }
}
