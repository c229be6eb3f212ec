#include "tfe/driver.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tfe/flux.hpp"
#include "tfe/kernels.hpp"
#include "tfe/output.hpp"
#include "tfe/stepper.hpp"

namespace tfe {

using nlohmann::json;

bool all_fatal_passed(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const Check& c) { return c.passed || !c.fatal; });
}

namespace {

constexpr double kLedgerTol = 1e-10;
constexpr double kLeadingTol = 1e-12;

Check make_check(std::string name, bool passed, double value, double threshold, bool fatal = true,
                 std::string detail = {}) {
  return Check{std::move(name), passed, fatal, value, threshold, std::move(detail)};
}

json checks_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks) {
    json j{{"name", c.name}, {"passed", c.passed}, {"fatal", c.fatal}, {"value", c.value},
           {"threshold", c.threshold}};
    if (!c.detail.empty()) j["detail"] = c.detail;
    arr.push_back(std::move(j));
  }
  return arr;
}

json params_json(const Parameters& p) {
  return json{{"alpha", p.alpha},         {"h", p.h},           {"T", p.T},
              {"L", p.L},                 {"n_cells", p.n_cells}, {"grading", p.grading},
              {"eps_reg", p.eps_reg},     {"tol_newton", p.tol_newton},
              {"tol_fit", p.tol_fit},     {"fit_window", p.fit_window}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

RunOptions run_options(const RunConfig& cfg, bool leading_order) {
  RunOptions o;
  o.leading_order_only = leading_order;
  o.smallness_gate = cfg.smallness_gate;
  o.record_every = cfg.record_every;
  o.max_newton_iter = cfg.max_newton_iter;
  o.ledger_tol = kLedgerTol;
  o.beta1 = cfg.beta1;
  o.beta2 = cfg.beta2;
  return o;
}

}  // namespace

SimulationResult analyse(Trajectory traj, const RunConfig& cfg) {
  SimulationResult r;
  const Parameters& P = traj.params;
  const auto& s0 = traj.initial();
  double max_el_ratio = 0.0;
  r.min_leading_margin = std::numeric_limits<double>::infinity();
  const double halfA0 = 0.5 * s0.A;
  for (std::size_t j = 1; j < traj.steps.size(); ++j) {
    const auto& s = traj.steps[j];
    r.max_weak_violation = std::max(r.max_weak_violation, s.ledger_weak.relative_violation());
    r.max_max_violation = std::max(r.max_max_violation, s.ledger_max.relative_violation());
    const double target =
        std::max(P.tol_newton * std::max(1.0, std::sqrt(s.f_norm2)), 2.0 * s.el_floor);
    max_el_ratio = std::max(max_el_ratio, s.el_residual / target);
    const double margin = halfA0 - 0.5 * s.A - s.sum_hB;
    r.min_leading_margin = std::min(r.min_leading_margin, halfA0 > 0.0 ? margin / halfA0 : margin);
  }
  if (!std::isfinite(r.min_leading_margin)) r.min_leading_margin = 0.0;

  r.contact_line = advance_contact_line(traj);
  r.decay = decay_monitor(traj, cfg.decay_reference_time);
  r.velocity_constant = velocity_bound_constant(traj);
  r.global_constant = global_bound_constant(traj);

  auto& c = r.checks;
  c.push_back(make_check("completed", traj.completed(), traj.completed() ? 1 : 0, 1, true,
                         traj.failure ? traj.failure->kind + ": " + traj.failure->message : ""));
  c.push_back(make_check("ledger-weak", r.max_weak_violation <= kLedgerTol, r.max_weak_violation,
                         kLedgerTol));
  c.push_back(make_check("ledger-max", r.max_max_violation <= kLedgerTol, r.max_max_violation,
                         kLedgerTol));
  c.push_back(make_check("el-residual", max_el_ratio <= 1.0, max_el_ratio, 1.0, true,
                         "max el_residual / max(tol_newton max(1, ||f||), 2 el_floor)"));
  if (traj.leading_order_only) {
    c.push_back(make_check("leading-order-dissipation", r.min_leading_margin >= -kLeadingTol,
                           r.min_leading_margin, -kLeadingTol));
  }
  const GridField& u_end = *traj.final_u;
  bool monotone = true;
  try {
    von_mises_reconstruct(u_end, r.contact_line.back().Y0);
  } catch (const NumericalError&) {
    monotone = false;
  }
  c.push_back(make_check("transform-monotone", monotone, monotone ? 1 : 0, 1));

  c.push_back(make_check("B-nonincreasing", r.decay.B_nonincreasing, r.decay.first_B_increase, -1,
                         false));
  if (traj.last().t > cfg.decay_reference_time) {
    c.push_back(make_check("tB-decay", r.decay.tB_final < r.decay.tB_reference ||
                                           (r.decay.tB_final == 0.0 && r.decay.tB_reference == 0.0),
                           r.decay.tB_final, r.decay.tB_reference, false));
    c.push_back(make_check("sup-u-monotone-after-transient",
                           r.decay.sup_u_nonincreasing_after_transient, r.decay.fitted_slope_u,
                           r.decay.exponent_u, false));
    c.push_back(make_check("sup-du-monotone-after-transient",
                           r.decay.sup_du_nonincreasing_after_transient, r.decay.fitted_slope_du,
                           r.decay.exponent_du, false));
  }
  const double tv = contact_line_variation(r.contact_line);
  const double speed = contact_speed_integral(traj);
  c.push_back(make_check("contact-line-variation", tv <= speed * (1.0 + 1e-12) + 1e-300, tv,
                         speed, false));
  const auto vel = velocity_field(u_end, P.alpha, P.fit_window, P.tol_fit);
  const double vdiff = std::abs(vel.V_contact - vel.V_extrapolated);
  const double vtol = 10.0 * P.tol_fit * std::max(1.0, std::abs(vel.V_contact));
  c.push_back(make_check("velocity-routes-consistent", vdiff <= vtol, vdiff, vtol, false));
  c.push_back(make_check("support-away-from-truncation", !traj.support_near_truncation,
                         traj.support_near_truncation ? 1 : 0, 0, false));
  r.trajectory = std::move(traj);
  return r;
}

SimulationResult simulate(const GridField& u0, const RunConfig& cfg, bool leading_order) {
  return analyse(run_simulation(u0, cfg.parameters, run_options(cfg, leading_order)), cfg);
}

SimulationResult simulate(const RunConfig& cfg, bool leading_order) {
  const auto grid = make_graded_grid(cfg.parameters);
  const auto u0 = make_initial_profile(cfg.profile, grid, cfg.parameters.alpha, cfg.seed);
  return simulate(u0, cfg, leading_order);
}

KernelStudy kernel_annihilation_study(const RunConfig& cfg) {
  const Parameters& P = cfg.parameters;
  const double lo = cfg.kernel_window_lo * cfg.profile.cutoff_lo;
  const double hi = cfg.kernel_window_hi * cfg.profile.cutoff_lo;
  KernelStudy study;
  for (int n : cfg.kernel_levels) {
    const auto grid = Grid::graded(P.L, n, P.grading);
    const auto u = make_initial_profile(cfg.profile, grid, P.alpha, cfg.seed);
    const auto flux = flux_operator(u, P.alpha);
    const auto x = grid->nodes();
    const auto q = grid->weights();
    KernelLevel lv;
    lv.n_cells = n;
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (x[i] < lo || x[i] > hi) continue;
      s += q[i] * flux.Lu[i] * flux.Lu[i];
      lv.residual_max = std::max(lv.residual_max, std::abs(flux.Lu[i]));
    }
    lv.residual_l2 = std::sqrt(s);
    if (!study.levels.empty()) {
      const auto& prev = study.levels.back();
      lv.order = std::log(prev.residual_l2 / lv.residual_l2) /
                 std::log(static_cast<double>(n) / prev.n_cells);
    }
    study.levels.push_back(lv);
  }
  study.min_order = std::numeric_limits<double>::infinity();
  study.max_order = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < study.levels.size(); ++k) {
    study.min_order = std::min(study.min_order, study.levels[k].order);
    study.max_order = std::max(study.max_order, study.levels[k].order);
  }
  return study;
}

SweepStudy run_sweep(const RunConfig& cfg, bool leading_order) {
  std::vector<double> hs = cfg.sweep_h.empty() ? std::vector<double>{cfg.parameters.h} : cfg.sweep_h;
  std::vector<int> ns =
      cfg.sweep_n_cells.empty() ? std::vector<int>{cfg.parameters.n_cells} : cfg.sweep_n_cells;
  std::sort(hs.begin(), hs.end(), std::greater<>());
  std::sort(ns.begin(), ns.end());
  SweepStudy study;
  for (int n : ns) {
    for (double h : hs) study.cases.push_back(SweepCase{h, n, {}});
  }
  const int count = static_cast<int>(study.cases.size());
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < count; ++k) {
    try {
      RunConfig local = cfg;
      local.parameters.h = study.cases[k].h;
      local.parameters.n_cells = study.cases[k].n_cells;
      local.parameters.validate();
      study.cases[k].result = simulate(local, leading_order);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (int n : ns) {
    std::vector<const SweepCase*> row;
    for (const auto& c : study.cases) {
      if (c.n_cells == n && c.result.trajectory.completed()) row.push_back(&c);
    }
    if (row.size() < 2) continue;
    std::vector<double> diffs;
    for (std::size_t k = 0; k + 1 < row.size(); ++k) {
      const auto& a = *row[k]->result.trajectory.final_u;
      const auto& b = *row[k + 1]->result.trajectory.final_u;
      std::vector<double> d(a.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
      diffs.push_back(std::sqrt(kernels::parallel::weighted_dot(a.grid()->weights(), d, d)));
    }
    study.time_differences.emplace_back(n, std::move(diffs));
  }
  return study;
}

namespace {

json decay_json(const DecayReport& d) {
  return json{{"B_nonincreasing", d.B_nonincreasing},
              {"first_B_increase", d.first_B_increase},
              {"tB_reference", d.tB_reference},
              {"tB_final", d.tB_final},
              {"exponent_u", d.exponent_u},
              {"exponent_du", d.exponent_du},
              {"fitted_slope_u", d.fitted_slope_u},
              {"fitted_slope_du", d.fitted_slope_du},
              {"sup_u_nonincreasing_after_transient", d.sup_u_nonincreasing_after_transient},
              {"sup_du_nonincreasing_after_transient", d.sup_du_nonincreasing_after_transient},
              {"max_dissipation_epsilon", d.max_dissipation_epsilon}};
}

json simulation_json(const SimulationResult& r, const RunConfig& cfg, const std::string& mode) {
  const auto& traj = r.trajectory;
  json j{{"mode", mode},
         {"parameters", params_json(traj.params)},
         {"profile", cfg.profile.name},
         {"amplitude", cfg.profile.amplitude},
         {"seed", cfg.seed},
         {"steps", traj.steps.size() - 1},
         {"t_final", traj.last().t},
         {"t_final_original", original_time(traj.last().t, traj.params.alpha)},
         {"A0", traj.initial().A},
         {"B0", traj.initial().B},
         {"A_final", traj.last().A},
         {"B_final", traj.last().B},
         {"Y0_final", r.contact_line.back().Y0},
         {"max_weak_violation", r.max_weak_violation},
         {"max_max_violation", r.max_max_violation},
         {"min_leading_margin", r.min_leading_margin},
         {"velocity_constant", r.velocity_constant},
         {"global_constant", r.global_constant},
         {"decay", decay_json(r.decay)},
         {"checks", checks_json(r.checks)},
         {"passed", all_fatal_passed(r.checks)}};
  if (traj.failure) {
    j["failure"] = json{{"step", traj.failure->step},
                        {"t", traj.failure->t},
                        {"kind", traj.failure->kind},
                        {"message", traj.failure->message}};
  }
  return j;
}

void write_simulation(const SimulationResult& r, const RunConfig& cfg, const std::string& dir,
                      const std::string& mode) {
  ensure_directory(dir);
  write_summary_csv(dir + "/summary.csv", r.trajectory, r.contact_line);
  ensure_directory(dir + "/profiles");
  const auto& P = r.trajectory.params;
  for (std::size_t j = 0; j < r.trajectory.steps.size(); ++j) {
    const auto& s = r.trajectory.steps[j];
    if (!s.u) continue;
    char name[64];
    std::snprintf(name, sizeof name, "/profiles/step_%07d.csv", s.step);
    write_profile_csv(dir + name, *s.u, P.alpha, r.contact_line[j].Y0, P.fit_window, P.tol_fit);
  }
  write_json(dir + "/summary.json", simulation_json(r, cfg, mode));
}

int report(std::ostream& log, bool quiet, const std::vector<Check>& checks) {
  if (!quiet) {
    for (const auto& c : checks) {
      log << (c.passed ? "PASS " : (c.fatal ? "FAIL " : "WARN ")) << c.name << " value "
          << format_double(c.value) << " threshold " << format_double(c.threshold);
      if (!c.detail.empty()) log << " (" << c.detail << ")";
      log << '\n';
    }
  }
  return all_fatal_passed(checks) ? 0 : 1;
}

int command_simulate(const RunConfig& cfg, bool leading, const std::string& dir, bool quiet,
                     std::ostream& log) {
  const std::string mode = leading ? "leading-order-only" : "full";
  RunConfig local = cfg;
  auto grid = make_graded_grid(cfg.parameters);
  auto u0 = make_initial_profile(cfg.profile, grid, cfg.parameters.alpha, cfg.seed);
  RunOptions opt = run_options(cfg, leading);
  ensure_directory(dir);
  if (cfg.checkpoint_every > 0) {
    opt.checkpoint_path = dir + "/checkpoint.json";
    opt.checkpoint_every = cfg.checkpoint_every;
  }
  const long total = static_cast<long>(std::ceil(cfg.parameters.T / cfg.parameters.h - 1e-9));
  const long stride = std::max(1L, total / 10);
  if (!quiet) {
    opt.on_step = [&log, stride, total](const StepRecord& s) {
      if (s.step % stride == 0 || s.step == total) {
        log << "step " << s.step << "/" << total << " t " << format_double(s.t) << " B "
            << format_double(s.B) << " newton " << s.newton_iterations << '\n';
      }
    };
  }
  auto result = analyse(run_simulation(u0, cfg.parameters, opt), local);
  write_simulation(result, cfg, dir, mode);
  return report(log, quiet, result.checks);
}

int command_audit(const RunConfig& cfg, const std::string& dir, bool quiet, std::ostream& log) {
  AuditStudyOptions o;
  o.alpha = cfg.parameters.alpha;
  o.L = cfg.audit_L;
  o.n_cells = cfg.parameters.n_cells;
  o.grading = cfg.parameters.grading;
  o.refinements = cfg.audit_refinements;
  o.count = cfg.audit_count;
  o.seed = cfg.seed;
  o.fit_window = cfg.parameters.fit_window;
  o.tol_fit = cfg.parameters.tol_fit;
  o.entries = cfg.audit_entries;
  const auto study = run_audit_study(o);
  ensure_directory(dir);
  write_audit_csv(dir + "/audit.csv", study);
  std::vector<Check> checks;
  json entries = json::array();
  for (const auto& s : study.summaries) {
    entries.push_back(json{{"entry", s.entry},
                           {"max_ratio", s.max_ratio},
                           {"max_relative_change", s.max_relative_change},
                           {"all_finite", s.all_finite}});
    if (s.identity) {
      const double worst = *std::max_element(s.max_ratio.begin(), s.max_ratio.end());
      checks.push_back(make_check(s.entry, worst <= 1e-8 && s.all_finite, worst, 1e-8));
    } else {
      checks.push_back(make_check(s.entry + "-finite", s.all_finite, s.all_finite ? 1 : 0, 1,
                                  false));
      checks.push_back(make_check(s.entry + "-refinement-stable", s.max_relative_change < 0.1,
                                  s.max_relative_change, 0.1, false));
    }
  }
  write_json(dir + "/audit_summary.json",
             json{{"alpha", o.alpha}, {"seed", o.seed}, {"count", o.count},
                  {"n_cells", o.n_cells}, {"refinements", o.refinements}, {"L", o.L},
                  {"entries", entries}, {"checks", checks_json(checks)},
                  {"passed", all_fatal_passed(checks)}});
  return report(log, quiet, checks);
}

int command_kernel(const RunConfig& cfg, const std::string& dir, bool quiet, std::ostream& log) {
  const auto study = kernel_annihilation_study(cfg);
  ensure_directory(dir);
  {
    CsvWriter csv(dir + "/kernel_test.csv", {"n_cells", "residual_l2", "residual_max", "order"});
    for (const auto& lv : study.levels) {
      csv.cell(lv.n_cells).cell(lv.residual_l2).cell(lv.residual_max).cell(lv.order);
      csv.end_row();
    }
  }
  std::vector<Check> checks{
      make_check("kernel-order-min", study.min_order >= 0.8, study.min_order, 0.8),
      make_check("kernel-order-max", study.max_order <= 2.5, study.max_order, 2.5)};
  write_json(dir + "/kernel_summary.json",
             json{{"alpha", cfg.parameters.alpha}, {"profile", cfg.profile.name},
                  {"min_order", study.min_order}, {"max_order", study.max_order},
                  {"checks", checks_json(checks)}, {"passed", all_fatal_passed(checks)}});
  return report(log, quiet, checks);
}

int command_sweep(const RunConfig& cfg, bool leading, const std::string& dir, bool quiet,
                  std::ostream& log) {
  const auto study = run_sweep(cfg, leading);
  std::vector<Check> checks;
  json cases = json::array();
  for (const auto& c : study.cases) {
    char name[96];
    std::snprintf(name, sizeof name, "/case_h%.6g_n%d", c.h, c.n_cells);
    const std::string sub = dir + name;
    RunConfig local = cfg;
    local.parameters.h = c.h;
    local.parameters.n_cells = c.n_cells;
    write_simulation(c.result, local, sub, leading ? "leading-order-only" : "full");
    for (const auto& k : c.result.checks) {
      Check copy = k;
      copy.name = std::string(name + 1) + "/" + k.name;
      checks.push_back(copy);
    }
    cases.push_back(json{{"h", c.h},
                         {"n_cells", c.n_cells},
                         {"velocity_constant", c.result.velocity_constant},
                         {"global_constant", c.result.global_constant},
                         {"passed", all_fatal_passed(c.result.checks)}});
  }
  json conv = json::array();
  for (const auto& [n, diffs] : study.time_differences) {
    conv.push_back(json{{"n_cells", n}, {"differences", diffs}});
    for (std::size_t k = 0; k + 1 < diffs.size(); ++k) {
      const double ratio = diffs[k] / diffs[k + 1];
      checks.push_back(make_check("time-convergence-n" + std::to_string(n) + "-" +
                                      std::to_string(k),
                                  ratio >= 1.8, ratio, 1.8, false));
    }
  }
  ensure_directory(dir);
  write_json(dir + "/sweep_summary.json",
             json{{"cases", cases}, {"time_differences", conv}, {"checks", checks_json(checks)},
                  {"passed", all_fatal_passed(checks)}});
  return report(log, quiet, checks);
}

}  // namespace

int run_command(const std::string& command, const std::string& config_path,
                const DriverOptions& options, std::ostream& log) {
  RunConfig cfg = parse_config(config_path);
  if (options.seed) cfg.seed = *options.seed;
  const std::string dir = options.out_dir.value_or(cfg.output_dir);
  Mode mode = cfg.mode;
  if (command == "audit") mode = Mode::Audit;
  else if (command == "kernel-test") mode = Mode::KernelTest;
  else if (command == "sweep") mode = Mode::Sweep;
  else if (command != "run") throw ConfigError("unknown command '" + command + "'");
  if (!options.quiet) {
    log << "tfe " << command << " mode " << to_string(mode) << " -> " << dir << " (threads "
        << kernels::thread_count() << ")\n";
  }
  switch (mode) {
    case Mode::Full: return command_simulate(cfg, false, dir, options.quiet, log);
    case Mode::LeadingOrderOnly: return command_simulate(cfg, true, dir, options.quiet, log);
    case Mode::Audit: return command_audit(cfg, dir, options.quiet, log);
    case Mode::KernelTest: return command_kernel(cfg, dir, options.quiet, log);
    case Mode::Sweep:
      return command_sweep(cfg, cfg.mode == Mode::LeadingOrderOnly, dir, options.quiet, log);
  }
  return 1;
}

}  // namespace tfe
