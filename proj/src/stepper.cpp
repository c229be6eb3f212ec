#include "tfe/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "tfe/diagnostics.hpp"
#include "tfe/flux.hpp"
#include "tfe/kernels.hpp"
#include "tfe/weighted_calculus.hpp"

namespace tfe {

double LedgerEntry::relative_violation() const {
  const double excess = lhs - rhs;
  if (scale == 0.0) return excess > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return excess / scale;
}

StepProblem StepProblem::make(GridField u_prev, GridField f_prev, double h, double alpha) {
  if (u_prev.grid() != f_prev.grid()) throw NumericalError("StepProblem: fields on different grids");
  if (!(h > 0.0)) throw ConfigError("h: time step must be positive");
  std::vector<double> ft(u_prev.size());
  for (std::size_t i = 0; i < ft.size(); ++i) ft[i] = h * f_prev[i] + u_prev[i];
  GridField f_tilde(u_prev.grid(), std::move(ft));
  return StepProblem{std::move(u_prev), std::move(f_prev), std::move(f_tilde), h, alpha};
}

namespace {

namespace par = kernels::parallel;

// Newton iteration state on raw arrays.
class StepSolver {
 public:
  StepSolver(const StepProblem& p, const NewtonOptions& o)
      : p_(p), opt_(o), model_(p.u_prev.grid(), p.alpha), n_(p.u_prev.size()),
        q_(p.u_prev.grid()->weights()), ws_(n_), trial_ws_(n_), r_(n_), g_(n_), step_(n_),
        trial_(n_), H_(n_) {}

  // Fills the flux workspace for u and the residual r = u + h L u - ftilde.
  // Returns el = ||r||_q / h.
  double residual(std::span<const double> u) {
    energy_ = model_.evaluate(u, ws_);
    const auto ft = p_.f_tilde.values();
    for (std::size_t i = 0; i < n_; ++i) r_[i] = u[i] + p_.h * ws_.lu[i] - ft[i];
    return std::sqrt(par::weighted_dot(q_, r_, r_)) / p_.h;
  }

  // Rounding bound of the el value last returned by residual(). L u is a
  // fourth-order difference, so its absolute error scales like
  // eps |u| x^(alpha+2) |D^2 u|^(alpha-1) / dx^4 and can exceed the
  // Newton tolerance on fine grids.
  double residual_floor(std::span<const double> u) {
    const auto& s = model_.grid()->second_difference();
    const auto xw = model_.weight();
    const auto ft = p_.f_tilde.values();
    const double eps = std::numeric_limits<double>::epsilon();
    auto abs_apply = [&](auto&& v, std::size_t i) {
      double m = std::abs(s.di[i] * v(i));
      if (i > 0) m += std::abs(s.lo[i] * v(i - 1));
      if (i + 1 < n_) m += std::abs(s.up[i] * v(i + 1));
      return m;
    };
    // noise of w, stored in step_ (free until the next direction())
    for (std::size_t i = 0; i < n_; ++i) {
      const double nd = 3.0 * eps * abs_apply([&](std::size_t k) { return u[k]; }, i);
      step_[i] = p_.alpha * xw[i] * std::pow(std::abs(ws_.d2u[i]), p_.alpha - 1.0) * nd +
                 4.0 * eps * std::abs(ws_.w[i]);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const double nl = abs_apply([&](std::size_t k) { return step_[k]; }, i) +
                        3.0 * eps * abs_apply([&](std::size_t k) { return ws_.w[k]; }, i);
      g_[i] = eps * (std::abs(u[i]) + std::abs(ft[i]) + std::abs(r_[i])) + p_.h * nl;
    }
    return std::sqrt(par::weighted_dot(q_, g_, g_)) / p_.h;
  }

  // Newton direction at the state last passed to residual().
  void direction() {
    par::hessian_bands(model_.grid()->second_difference(), q_, model_.weight(), ws_.d2u,
                       p_.alpha, p_.h, opt_.eps_reg, H_);
    for (std::size_t i = 0; i < n_; ++i) g_[i] = -q_[i] * r_[i];
    if (!kernels::solve_pentadiagonal_spd(H_, g_, step_)) {

      // Steepest descent in the quadrature metric.
      for (std::size_t i = 0; i < n_; ++i) step_[i] = -r_[i];
    }
  }

  // Backtracking on J along step_. Returns the accepted step length or 0.
  double line_search(std::vector<double>& u) {
    const auto ft = p_.f_tilde.values();
    const double slope = par::weighted_dot(q_, r_, step_);
    if (!(slope < 0.0)) return 0.0;
    const double coeff = p_.h / (p_.alpha + 1.0);
    const double eps = std::numeric_limits<double>::epsilon();
    const double noise0 = energy_noise(u, ws_);
    double t = 1.0;
    for (int k = 0; k < 60; ++k) {
      double quad_noise = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double d = t * step_[i];
        trial_[i] = u[i] + d;
        g_[i] = d * (u[i] + 0.5 * d - ft[i]);
        quad_noise += q_[i] * std::abs(d) * (std::abs(u[i]) + std::abs(d) + std::abs(ft[i]));
      }
      const double e_trial = model_.energy(trial_, trial_ws_);
      const double dJ = par::weighted_sum(q_, g_) + coeff * (e_trial - energy_);
      const double slack =
          16.0 * eps * (quad_noise + coeff * (noise0 + energy_noise(trial_, trial_ws_)));
      if (dJ <= opt_.armijo * t * slope + slack) {
        u.swap(trial_);
        return t;
      }
      t *= opt_.backtrack;
    }
    return 0.0;
  }

 private:
  // Rounding bound of one energy evaluation: each D^2 u entry carries an
  // absolute error of order eps * sum |stencil * u|, which the density
  // amplifies by (alpha+1) |D^2 u|^alpha.
  double energy_noise(std::span<const double> u, const FluxWorkspace& ws) const {
    const auto& s = model_.grid()->second_difference();
    const auto xw = model_.weight();
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double mag = std::abs(s.di[i] * u[i]);
      if (i > 0) mag += std::abs(s.lo[i] * u[i - 1]);
      if (i + 1 < n_) mag += std::abs(s.up[i] * u[i + 1]);
      acc += q_[i] * (ws.density[i] +
                      (p_.alpha + 1.0) * xw[i] * std::pow(std::abs(ws.d2u[i]), p_.alpha) * mag);
    }
    return acc;
  }

  const StepProblem& p_;
  const NewtonOptions& opt_;
  FluxModel model_;
  std::size_t n_;
  std::span<const double> q_;
  FluxWorkspace ws_, trial_ws_;
  std::vector<double> r_, g_, step_, trial_;
  kernels::PentaBands H_;
  double energy_ = 0.0;
};

}  // namespace

double functional_J(const GridField& u, const StepProblem& problem) {
  const auto q = u.grid()->weights();
  const auto ft = problem.f_tilde.values();
  std::vector<double> quad(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) quad[i] = 0.5 * u[i] * u[i] - ft[i] * u[i];
  const double B = norm_B(u, problem.alpha);
  return par::weighted_sum(q, quad) + problem.h / (problem.alpha + 1.0) * B;
}

double euler_lagrange_residual(const GridField& u, const StepProblem& problem) {
  const auto flux = flux_operator(u, problem.alpha);
  std::vector<double> r(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    r[i] = (u[i] - problem.u_prev[i]) / problem.h + flux.Lu[i] - problem.f_prev[i];
  }
  return std::sqrt(par::weighted_dot(u.grid()->weights(), r, r));
}

MinimizeOutcome minimize_step(const StepProblem& problem, const NewtonOptions& options,
                              const std::optional<GridField>& warm_start) {
  const auto& grid = problem.u_prev.grid();
  StepSolver solver(problem, options);
  std::vector<double> u = warm_start ? warm_start->vector() : problem.u_prev.vector();
  if (u.size() != problem.u_prev.size()) throw NumericalError("minimize_step: warm start size");

  const double f_norm = std::sqrt(quadrature_dot(problem.f_prev, problem.f_prev));
  const double target = options.tol * std::max(1.0, f_norm);

  MinimizeOutcome out{GridField::zeros(grid)};
  std::vector<double> best = u;
  double best_el = std::numeric_limits<double>::infinity();
  double best_floor = 0.0;
  int polished = -1;  // -1 while not yet converged
  int it = 0;
  for (;; ++it) {
    const double el = solver.residual(u);
    if (!std::isfinite(el)) {
      out.message = "non-finite residual";
      break;
    }
    const double floor = solver.residual_floor(u);
    const double previous_best = best_el;
    if (el < best_el) {
      best_el = el;
      best_floor = floor;
      best = u;
    }
    if (polished >= 0) {
      // Polishing continues only while the residual keeps halving.
      if (!(el <= 0.5 * previous_best) || polished >= options.polish_steps) break;
    }
    if (el <= std::max(target, floor) && polished < 0) {
      out.converged = true;
      polished = 0;
      if (el == 0.0 || options.polish_steps == 0) break;
    }
    if (it >= options.max_iter) {
      if (!out.converged) out.message = "iteration cap reached";
      break;
    }
    solver.direction();
    const double t = solver.line_search(u);
    if (t == 0.0) {
      if (!out.converged) out.message = "line search failed";
      break;
    }
    if (polished >= 0) ++polished;
  }
  out.iterations = it;
  out.u_next = GridField(grid, std::move(best));
  out.el_residual = euler_lagrange_residual(out.u_next, problem);
  out.el_floor = best_floor;
  out.J_value = functional_J(out.u_next, problem);
  if (out.converged && out.el_residual > std::max(target, 2.0 * best_floor)) {
    out.converged = false;
    out.message = "residual above tolerance after polishing";
  }
  return out;
}

namespace {

using nlohmann::json;

json params_to_json(const Parameters& p) {
  return json{{"alpha", p.alpha},           {"h", p.h},
              {"T", p.T},                   {"L", p.L},
              {"n_cells", p.n_cells},       {"grading", p.grading},
              {"eps_reg", p.eps_reg},       {"tol_newton", p.tol_newton},
              {"tol_fit", p.tol_fit},       {"fit_window", p.fit_window}};
}

Parameters params_from_json(const json& j) {
  Parameters p;
  p.alpha = j.at("alpha").get<double>();
  p.h = j.at("h").get<double>();
  p.T = j.at("T").get<double>();
  p.L = j.at("L").get<double>();
  p.n_cells = j.at("n_cells").get<int>();
  p.grading = j.at("grading").get<double>();
  p.eps_reg = j.at("eps_reg").get<double>();
  p.tol_newton = j.at("tol_newton").get<double>();
  p.tol_fit = j.at("tol_fit").get<double>();
  p.fit_window = j.at("fit_window").get<int>();
  return p;
}

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& cp) {
  json j{{"format", "tfe-checkpoint-1"},
         {"params", params_to_json(cp.params)},
         {"leading_order_only", cp.leading_order_only},
         {"step", cp.step},
         {"A0", cp.A0},
         {"B0", cp.B0},
         {"sum_hB", cp.sum_hB},
         {"u", cp.u.vector()}};
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
    out << j.dump() << '\n';
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint " + path + ": " + e.what());
  }
  if (j.value("format", std::string{}) != "tfe-checkpoint-1") {
    throw ConfigError("checkpoint " + path + ": unknown format");
  }
  Parameters params = params_from_json(j.at("params"));
  params.validate();
  auto values = j.at("u").get<std::vector<double>>();
  if (values.size() != static_cast<std::size_t>(params.n_cells)) {
    throw ConfigError("checkpoint " + path + ": u has wrong length");
  }
  GridField u(make_graded_grid(params), std::move(values));
  return Checkpoint{params,
                    j.at("leading_order_only").get<bool>(),
                    j.at("step").get<int>(),
                    std::move(u),
                    j.at("A0").get<double>(),
                    j.at("B0").get<double>(),
                    j.at("sum_hB").get<double>()};
}

namespace {

double weighted_sup(std::span<const double> x, std::span<const double> v, double beta) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::pow(x[i], beta) * std::abs(v[i]));
  return m;
}

// Fills the state-only fields of a record (everything except the ledgers).
void describe_state(StepRecord& rec, const GridField& u, const FluxAssembly& flux,
                    const Parameters& params, double beta1, double beta2) {
  const auto& grid = u.grid();
  const auto x = grid->nodes();
  rec.A = norm_A(u);
  rec.B = flux.energy_B;
  rec.C = quadrature_dot(flux.Lu, flux.Lu);
  const auto contact = fit_contact_slope(flux.w, params.alpha, params.fit_window, params.tol_fit);
  rec.a_coeff = contact.a;
  rec.c_coeff = contact.c;
  rec.fit_residual = contact.fit_residual;
  rec.coeff_resolved = contact.resolved;
  const auto vel = velocity_field(u, flux.w, contact, params.alpha);
  rec.V_sup = vel.V_sup;
  rec.V_contact = vel.V_contact;
  rec.sup_weighted_u = weighted_sup(x, u.values(), beta1);
  rec.sup_weighted_du = weighted_sup(x, first_derivative(u).values(), beta2);
  const double umax = u.max_abs();
  double tail = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (x[i] > 0.9 * grid->length()) tail = std::max(tail, std::abs(u[i]));
  }
  rec.tail_fraction = umax > 0.0 ? tail / umax : 0.0;
}

struct LoopState {
  Parameters params;
  bool leading_order_only;
  int start_step;
  GridField u;
  double A0, B0, sum_hB;
};

constexpr double kTruncationFlag = 1e-6;

Trajectory time_loop(LoopState st, const RunOptions& opt) {
  const Parameters& P = st.params;
  Trajectory traj;
  traj.params = P;
  traj.leading_order_only = st.leading_order_only;
  traj.beta1 = opt.beta1;
  traj.beta2 = opt.beta2.value_or(2.0 / (P.alpha + 1.0));

  const auto grid = st.u.grid();
  const FluxModel model(grid, P.alpha);
  const long total = std::max(1L, static_cast<long>(std::ceil(P.T / P.h - 1e-9)));

  NewtonOptions nopt;
  nopt.tol = P.tol_newton;
  nopt.eps_reg = P.eps_reg;
  nopt.max_iter = opt.max_newton_iter;

  auto should_store = [&](int step) {
    if (step == st.start_step || step == total) return true;
    return opt.record_every > 0 && step % opt.record_every == 0;
  };

  auto checkpoint = [&](int step, const GridField& u, double sum_hB) {
    if (opt.checkpoint_path.empty()) return;
    write_checkpoint(opt.checkpoint_path,
                     Checkpoint{P, st.leading_order_only, step, u, st.A0, st.B0, sum_hB});
  };

  FluxAssembly flux_prev = model.assemble(st.u);
  {
    StepRecord rec;
    rec.step = st.start_step;
    rec.t = st.start_step * P.h;
    describe_state(rec, st.u, flux_prev, P, traj.beta1, traj.beta2);
    rec.sum_hB = st.sum_hB;
    if (should_store(rec.step)) rec.u = st.u;
    traj.support_near_truncation = rec.tail_fraction > kTruncationFlag;
    traj.steps.push_back(rec);
    if (opt.on_step) opt.on_step(traj.steps.back());
  }

  GridField u_prev = st.u;
  double sum_hB = st.sum_hB;
  for (int j = st.start_step + 1; j <= total; ++j) {
    const double t = j * P.h;
    auto fail = [&](const std::string& kind, const std::string& msg) {
      traj.failure = FailureRecord{j, t, kind, msg};
    };
    if (u_prev.max_abs() > 0.5) {
      fail("smallness-lost", "sup|u| exceeds 1/2");
      break;
    }
    GridField f = GridField::zeros(grid);
    if (!st.leading_order_only) {
      try {
        f = nonlinear_rhs(u_prev, flux_prev, P.alpha);
      } catch (const NumericalError& e) {
        fail("transform-degenerate", e.what());
        break;
      }
    }
    const auto problem = StepProblem::make(u_prev, f, P.h, P.alpha);
    auto outcome = minimize_step(problem, nopt);
    if (!outcome.converged) {
      std::ostringstream msg;
      msg << outcome.message << " (el_residual " << outcome.el_residual << " after "
          << outcome.iterations << " iterations)";
      fail("newton-not-converged", msg.str());
      break;
    }
    const GridField& u = outcome.u_next;
    FluxAssembly flux = model.assemble(u);

    StepRecord rec;
    rec.step = j;
    rec.t = t;
    describe_state(rec, u, flux, P, traj.beta1, traj.beta2);
    rec.el_residual = outcome.el_residual;
    rec.el_floor = outcome.el_floor;
    rec.newton_iterations = outcome.iterations;

    std::vector<double> du(u.size()), su(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      du[i] = u[i] - u_prev[i];
      su[i] = u[i] + u_prev[i];
    }
    const auto q = grid->weights();
    const double half_dA = 0.5 * par::weighted_dot(q, du, su);
    const double fu = quadrature_dot(f, u);
    const double ff = quadrature_dot(f, f);
    const StepRecord& prev = traj.steps.back();
    rec.f_norm2 = ff;
    rec.increment_norm2 = par::weighted_dot(q, du, du);
    rec.ledger_weak = LedgerEntry{half_dA + P.h * rec.B, P.h * fu,
                                  0.5 * (rec.A + prev.A) + P.h * rec.B + P.h * std::abs(fu)};
    const double kB = 2.0 / (P.alpha + 1.0);
    rec.ledger_max = LedgerEntry{kB * (rec.B - prev.B) + P.h * rec.C, P.h * ff,
                                 kB * (rec.B + prev.B) + P.h * rec.C + P.h * ff};
    sum_hB += P.h * rec.B;
    rec.sum_hB = sum_hB;
    if (should_store(j)) rec.u = u;
    traj.support_near_truncation =
        traj.support_near_truncation || rec.tail_fraction > kTruncationFlag;
    traj.steps.push_back(rec);
    if (opt.on_step) opt.on_step(traj.steps.back());

    const bool weak_ok = rec.ledger_weak.holds(opt.ledger_tol);
    const bool max_ok = rec.ledger_max.holds(opt.ledger_tol);
    u_prev = u;
    flux_prev = std::move(flux);
    if (!weak_ok || !max_ok) {
      std::ostringstream msg;
      msg.precision(17);
      if (!weak_ok) msg << "weak ledger relative violation " << rec.ledger_weak.relative_violation();
      if (!weak_ok && !max_ok) msg << "; ";
      if (!max_ok) msg << "max ledger relative violation " << rec.ledger_max.relative_violation();
      fail("ledger-violation", msg.str());
      break;
    }
    if (opt.checkpoint_every > 0 && j % opt.checkpoint_every == 0) checkpoint(j, u_prev, sum_hB);
  }
  traj.final_u = u_prev;
  if (!traj.steps.back().u) traj.steps.back().u = u_prev;
  checkpoint(traj.steps.back().step, u_prev, sum_hB);
  return traj;
}

}  // namespace

Trajectory run_simulation(const GridField& u0, const Parameters& params, const RunOptions& options) {
  params.validate();
  if (u0.size() != static_cast<std::size_t>(params.n_cells)) {
    throw ConfigError("n_cells: initial data has " + std::to_string(u0.size()) + " nodes");
  }
  if (std::abs(u0.grid()->length() - params.L) > 1e-12 * params.L) {
    throw ConfigError("L: initial data grid has a different length");
  }
  const double A0 = norm_A(u0);
  const double B0 = norm_B(u0, params.alpha);
  if (A0 + B0 > options.smallness_gate) {
    std::ostringstream msg;
    msg << "initial data too large: A0 + B0 = " << A0 + B0 << " exceeds smallness_gate "
        << options.smallness_gate;
    throw ConfigError(msg.str());
  }
  return time_loop(LoopState{params, options.leading_order_only, 0, u0, A0, B0, 0.0}, options);
}

Trajectory resume_simulation(const Checkpoint& cp, const RunOptions& options) {
  cp.params.validate();
  return time_loop(
      LoopState{cp.params, cp.leading_order_only, cp.step, cp.u, cp.A0, cp.B0, cp.sum_hB},
      options);
}

}  // namespace tfe
