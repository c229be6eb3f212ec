#include "tfe/inequality_audit.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <sstream>

#include "tfe/flux.hpp"
#include "tfe/kernels.hpp"

namespace tfe {

namespace {

constexpr double kEdge = 1e-12;

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Closed interval [lo, hi] or half-open [lo, hi) membership, with a little
// slack at closed ends.
void require_range(const std::string& entry, const std::string& name, double v, double lo,
                   double hi, bool hi_open) {
  const bool ok = v >= lo - kEdge && (hi_open ? v < hi : v <= hi + kEdge);
  if (!ok) {
    throw ConfigError(entry + ": " + name + " = " + fmt(v) + " outside admissible range [" +
                      fmt(lo) + ", " + fmt(hi) + (hi_open ? ")" : "]"));
  }
}

double sup_weighted(std::span<const double> x, std::span<const double> v, double beta) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::pow(x[i], beta) * std::abs(v[i]));
  return m;
}

double power_or_zero(double base, double e) {
  if (base == 0.0) return e == 0.0 ? 1.0 : 0.0;
  return std::pow(base, e);
}

// Everything the catalog needs from one field, computed once.
struct FieldData {
  GridPtr grid;
  std::span<const double> x;
  std::vector<double> u, du, d2u, w, dw, lw;
  double A = 0, B = 0, C = 0;
  ContactCoefficients contact;

  FieldData(const GridField& field, double alpha, int fit_window, double tol_fit)
      : grid(field.grid()), x(grid->nodes()), u(field.vector()) {
    du = first_derivative(field).vector();
    d2u = second_derivative(field).vector();
    const auto wf = flux_potential(field, alpha);
    w = wf.vector();
    dw = first_derivative(wf).vector();
    lw = second_derivative(wf).vector();
    A = norm_A(field);
    B = norm_B(field, alpha);
    C = kernels::parallel::weighted_dot(grid->weights(), lw, lw);
    contact = fit_contact_slope(wf, alpha, fit_window, tol_fit);
  }

  double integral(const std::vector<double>& integrand) const {
    return kernels::parallel::weighted_sum(grid->weights(), integrand);
  }
};

using Params = std::map<std::string, double>;

NormReport finish(const std::string& name, double lhs, double rhs, Params params,
                  const FieldData& f) {
  params["A"] = f.A;
  params["B"] = f.B;
  params["C"] = f.C;
  return make_report(name, lhs, rhs, std::move(params));
}

NormReport hardy(const FieldData& f, double alpha, int which) {
  std::vector<double> g(f.u.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = which == 1 ? std::pow(f.x[i], -alpha) * std::pow(std::abs(f.u[i]), alpha + 1.0)
                      : f.x[i] * std::pow(std::abs(f.du[i]), alpha + 1.0);
  }
  return finish(which == 1 ? "hardy-1" : "hardy-2", f.integral(g), f.B, {{"alpha", alpha}}, f);
}

NormReport weight_xu(const FieldData& f, double alpha, const AuditSpec& s) {
  const double beta = s.beta.value_or(0.0);
  require_range("weight-xu", "beta", beta, (1.0 - alpha) / (alpha + 1.0),
                (alpha + 2.0) / (5.0 * alpha + 3.0), true);
  const double e = 3.0 * alpha - 1.0;
  const double lhs = sup_weighted(f.x, f.u, beta);
  const double rhs = power_or_zero(f.A, (alpha - 1.0 + (alpha + 1.0) * beta) / e) *
                     power_or_zero(f.B, (1.0 - 2.0 * beta) / e);
  return finish("weight-xu", lhs, rhs, {{"alpha", alpha}, {"beta", beta}}, f);
}

NormReport weight_xu_prime(const FieldData& f, double alpha, const AuditSpec& s) {
  const double beta = s.beta.value_or(2.0 / (alpha + 1.0));
  require_range("weight-xu'", "beta", beta, 2.0 / (alpha + 1.0),
                3.0 * (alpha + 2.0) / (5.0 * alpha + 3.0), true);
  const double e = 3.0 * alpha - 1.0;
  const double lhs = sup_weighted(f.x, f.du, beta);
  const double rhs = power_or_zero(f.A, ((alpha + 1.0) * beta - 2.0) / e) *
                     power_or_zero(f.B, (3.0 - 2.0 * beta) / e);
  return finish("weight-xu'", lhs, rhs, {{"alpha", alpha}, {"beta", beta}}, f);
}

NormReport weight_xu_lp(const FieldData& f, double alpha, const AuditSpec& s) {
  const std::string name = "weight-xu-lp";
  const double p = s.p.value_or(alpha + 1.0);
  const double nu = s.nu.value_or(0.0);
  const double upper = (alpha + 2.0) * (p - 2.0) / ((5.0 * alpha + 3.0) * p);
  if (p < 2.0 - kEdge) throw ConfigError(name + ": p = " + fmt(p) + " must be >= 2");
  if (std::abs(p - 2.0) <= kEdge) {
    if (std::abs(nu) > kEdge) throw ConfigError(name + ": nu must be 0 when p = 2");
  } else {
    const double lo_i = -alpha * (p - 2.0) / ((alpha - 1.0) * p);
    const double lo_ii = -(alpha + 1.0 + (alpha - 1.0) * p) / ((alpha + 1.0) * p);
    const bool in_i = p <= alpha + 1.0 + kEdge && nu >= lo_i - kEdge && nu < upper;
    const bool in_ii = p >= alpha + 1.0 - kEdge && nu >= lo_ii - kEdge && nu < upper;
    if (!in_i && !in_ii) {
      throw ConfigError(name + ": (nu, p) = (" + fmt(nu) + ", " + fmt(p) +
                        ") satisfies neither condition (i) nor (ii)");
    }
  }
  const double e = 3.0 * alpha - 1.0;
  const double gamma = ((alpha - 1.0) * p + (alpha + 1.0) * (nu * p + 1.0)) / e;
  const double delta = ((1.0 - 2.0 * nu) * p - 2.0) / e;
  std::vector<double> g(f.u.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = std::pow(f.x[i], nu * p) * std::pow(std::abs(f.u[i]), p);
  }
  const double rhs = power_or_zero(f.A, gamma) * power_or_zero(f.B, delta);
  return finish(name, f.integral(g), rhs, {{"alpha", alpha}, {"p", p}, {"nu", nu}}, f);
}

NormReport weight_xu_lp_prime(const FieldData& f, double alpha, const AuditSpec& s) {
  const std::string name = "weight-xu-lp'";
  const double p_crit = 4.0 * (alpha + 1.0) / (alpha + 3.0);
  const double p = s.p.value_or(p_crit);
  const double nu = s.nu.value_or((alpha + 2.0) / (2.0 * (alpha + 1.0)));
  if (std::abs(p - p_crit) <= kEdge) {
    if (std::abs(nu - (alpha + 2.0) / (2.0 * (alpha + 1.0))) > kEdge) {
      throw ConfigError(name + ": at p = 4(alpha+1)/(alpha+3) nu must equal (alpha+2)/(2(alpha+1))");
    }
  } else if (p > p_crit) {
    require_range(name, "nu", nu, 2.0 / (alpha + 1.0) + 2.0 * (alpha - 2.0) / ((alpha + 3.0) * p),
                  (alpha + 2.0) / (5.0 * alpha + 3.0) * (3.0 - 2.0 / p), true);
  } else {
    throw ConfigError(name + ": p = " + fmt(p) + " must be >= 4(alpha+1)/(alpha+3)");
  }
  const double e = 3.0 * alpha - 1.0;
  const double gamma = (alpha + 1.0 + ((alpha + 1.0) * nu - 2.0) * p) / e;
  const double delta = ((3.0 - 2.0 * nu) * p - 2.0) / e;
  std::vector<double> g(f.u.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = std::pow(f.x[i], nu * p) * std::pow(std::abs(f.du[i]), p);
  }
  const double rhs = power_or_zero(f.A, gamma) * power_or_zero(f.B, delta);
  return finish(name, f.integral(g), rhs, {{"alpha", alpha}, {"p", p}, {"nu", nu}}, f);
}

NormReport sup_wx(const FieldData& f, double alpha) {
  const double a = f.contact.a;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < f.w.size(); ++i) {
    s1 = std::max(s1, std::pow(f.x[i], -1.5) * std::abs(f.w[i] - a * f.x[i]));
    s2 = std::max(s2, std::pow(f.x[i], -0.5) * std::abs(f.dw[i] - a));
  }
  return finish("sup-wx", s1 + s2, std::sqrt(f.C), {{"alpha", alpha}, {"a", a}}, f);
}

NormReport coeff_a(const FieldData& f, double alpha) {
  const double e = 3.0 * alpha - 1.0;
  const double rhs = power_or_zero(f.B, alpha / e) * power_or_zero(f.C, (alpha - 1.0) / e);
  return finish("coeff-a", std::abs(f.contact.a), rhs, {{"alpha", alpha}}, f);
}

NormReport coeff_c(const FieldData& f, double alpha) {
  const double e = 3.0 * alpha - 1.0;
  const double rhs =
      power_or_zero(f.B, 1.0 / e) * power_or_zero(f.C, (alpha - 1.0) / (alpha * e));
  return finish("coeff-c", std::abs(f.contact.c), rhs, {{"alpha", alpha}}, f);
}

NormReport control_higher(const FieldData& f, double alpha) {
  std::vector<double> g(f.w.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = f.w[i] - f.contact.a * f.x[i];
    g[i] = r * r / std::pow(f.x[i], 4.0);
  }
  return finish("control-higher", f.integral(g), f.C, {{"alpha", alpha}}, f);
}

double sup_w_alt_lhs(const FieldData& f, double beta, double delta) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.w.size(); ++i) {
    m = std::max(m, std::pow(f.x[i], beta) * std::abs(f.w[i] - delta * f.contact.a * f.x[i]));
  }
  return m;
}

NormReport sup_w_alt(const FieldData& f, double alpha, const AuditSpec& s) {
  const double beta = s.beta.value_or(-1.5);
  require_range("sup-w-alt", "beta", beta, -1.5,
                -(3.0 * alpha + 4.0) / (2.0 * (2.0 * alpha + 1.0)), false);
  const double e = 3.0 * alpha - 1.0;
  const double rhs = power_or_zero(f.B, alpha * (2.0 * beta + 3.0) / e) *
                     power_or_zero(f.C, (-(alpha + 1.0) * beta - 2.0) / e);
  const double delta = beta < -1.0 ? 1.0 : 0.0;
  Params params{{"alpha", alpha}, {"beta", beta}, {"delta", delta}};
  auto r = finish("sup-w-alt", sup_w_alt_lhs(f, beta, delta), rhs, params, f);
  if (std::abs(beta + 1.0) <= kEdge) {
    // The switch point: report the delta = 1 branch alongside.
    const double lhs1 = sup_w_alt_lhs(f, beta, 1.0);
    r.parameters["lhs_delta1"] = lhs1;
    r.parameters["ratio_delta1"] = make_report("", lhs1, rhs).ratio;
    r.note = "beta at the delta switch; both branches evaluated";
  }
  return r;
}

NormReport sup_uxx(const FieldData& f, double alpha, const AuditSpec& s) {
  const double beta = s.beta.value_or((alpha + 2.0) / (alpha + 1.0));
  require_range("sup-uxx", "beta", beta, (2.0 * alpha + 1.0) / (2.0 * alpha),
                (4.0 * alpha + 7.0) / (2.0 * (2.0 * alpha + 1.0)), false);
  const double delta = beta < (alpha + 1.0) / alpha ? 1.0 : 0.0;
  const double k = (1.0 - alpha) / (alpha * alpha) * f.contact.c;
  double m = 0.0;
  for (std::size_t i = 0; i < f.d2u.size(); ++i) {
    const double prof = k * std::pow(f.x[i], -(alpha + 1.0) / alpha);
    m = std::max(m, std::pow(f.x[i], beta) * std::abs(f.d2u[i] - delta * prof));
  }
  const double e = 3.0 * alpha - 1.0;
  const double rhs = power_or_zero(f.B, (2.0 * beta * alpha - 2.0 * alpha - 1.0) / e) *
                     power_or_zero(f.C, (alpha + 3.0 - (alpha + 1.0) * beta) / e);
  return finish("sup-uxx", m, rhs, {{"alpha", alpha}, {"beta", beta}, {"delta", delta}}, f);
}

NormReport sup_u_alt(const FieldData& f, double alpha, const AuditSpec& s) {
  const double beta = s.beta.value_or((1.0 - alpha) / (alpha + 1.0));
  require_range("sup-u-alt", "beta", beta, (1.0 - 2.0 * alpha) / (2.0 * alpha),
                (1.0 - alpha) / (alpha + 1.0), false);
  const double delta = beta < (1.0 - alpha) / alpha ? 1.0 : 0.0;
  const double ex = kernel_exponent(alpha);
  double m = 0.0;
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    const double prof = f.contact.c * std::pow(f.x[i], ex);
    m = std::max(m, std::pow(f.x[i], beta) * std::abs(f.u[i] - delta * prof));
  }
  const double e = 3.0 * alpha - 1.0;
  const double rhs = power_or_zero(f.B, (2.0 * beta * alpha + 2.0 * alpha - 1.0) / e) *
                     power_or_zero(f.C, (1.0 - alpha - (alpha + 1.0) * beta) / e);
  return finish("sup-u-alt", m, rhs, {{"alpha", alpha}, {"beta", beta}, {"delta", delta}}, f);
}

NormReport sup_ux_alt(const FieldData& f, double alpha, const AuditSpec& s) {
  const double beta = s.beta.value_or(2.0 / (alpha + 1.0));
  require_range("sup-ux-alt", "beta", beta, 1.0 / (2.0 * alpha), 2.0 / (alpha + 1.0), false);
  const double delta = beta < 1.0 / alpha ? 1.0 : 0.0;
  const double k = kernel_exponent(alpha) * f.contact.c;
  double m = 0.0;
  for (std::size_t i = 0; i < f.du.size(); ++i) {
    const double prof = k * std::pow(f.x[i], -1.0 / alpha);
    m = std::max(m, std::pow(f.x[i], beta) * std::abs(f.du[i] - delta * prof));
  }
  const double e = 3.0 * alpha - 1.0;
  const double rhs = power_or_zero(f.B, (2.0 * beta * alpha - 1.0) / e) *
                     power_or_zero(f.C, (2.0 - (alpha + 1.0) * beta) / e);
  return finish("sup-ux-alt", m, rhs, {{"alpha", alpha}, {"beta", beta}, {"delta", delta}}, f);
}

NormReport con_lem_sup_uxx(const FieldData& f, double alpha) {
  if (!(alpha > 2.0)) throw ConfigError("con-lem-sup-uxx: requires alpha > 2");
  std::vector<double> g(f.d2u.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = std::pow(f.x[i], alpha + 2.0) * std::pow(std::abs(f.d2u[i]), alpha + 1.0);
    g[i] = d * d;
  }
  const double e = 3.0 * alpha - 1.0;
  const double rhs = power_or_zero(f.B, (2.0 * alpha - 1.0) / e) *
                     power_or_zero(f.C, (alpha + 1.0) / (2.0 * e));
  return finish("con-lem-sup-uxx", std::sqrt(f.integral(g)), rhs, {{"alpha", alpha}}, f);
}

NormReport b2_ac(const FieldData& f, double alpha) {
  return finish("B2-AC", f.B, std::sqrt(f.A) * std::sqrt(f.C), {{"alpha", alpha}}, f);
}

NormReport b2_identity(const FieldData& f, double alpha) {
  const double pairing = kernels::parallel::weighted_dot(f.grid->weights(), f.lw, f.u);
  auto r = finish("B2-identity", std::abs(f.B - pairing), f.B, {{"alpha", alpha}}, f);
  r.parameters["pairing"] = pairing;
  return r;
}

}  // namespace

const std::vector<std::string>& audit_catalog() {
  static const std::vector<std::string> names{
      "hardy-1",    "hardy-2",        "weight-xu",  "weight-xu'",     "weight-xu-lp",
      "weight-xu-lp'", "sup-wx",      "coeff-a",    "coeff-c",        "control-higher",
      "sup-w-alt",  "sup-uxx",        "sup-u-alt",  "sup-ux-alt",     "con-lem-sup-uxx",
      "B2-AC",      "B2-identity",    "est-nv"};
  return names;
}

NormReport inequality_audit(const GridField& u, double alpha, const AuditSpec& spec,
                            int fit_window, double tol_fit) {
  const auto& names = audit_catalog();
  if (std::find(names.begin(), names.end(), spec.entry) == names.end()) {
    throw ConfigError("audit entry: unknown name '" + spec.entry + "'");
  }
  if (spec.entry == "est-nv") return nonlinear_estimate_audit(u, alpha);
  const FieldData f(u, alpha, fit_window, tol_fit);
  const std::string& e = spec.entry;
  if (e == "hardy-1") return hardy(f, alpha, 1);
  if (e == "hardy-2") return hardy(f, alpha, 2);
  if (e == "weight-xu") return weight_xu(f, alpha, spec);
  if (e == "weight-xu'") return weight_xu_prime(f, alpha, spec);
  if (e == "weight-xu-lp") return weight_xu_lp(f, alpha, spec);
  if (e == "weight-xu-lp'") return weight_xu_lp_prime(f, alpha, spec);
  if (e == "sup-wx") return sup_wx(f, alpha);
  if (e == "coeff-a") return coeff_a(f, alpha);
  if (e == "coeff-c") return coeff_c(f, alpha);
  if (e == "control-higher") return control_higher(f, alpha);
  if (e == "sup-w-alt") return sup_w_alt(f, alpha, spec);
  if (e == "sup-uxx") return sup_uxx(f, alpha, spec);
  if (e == "sup-u-alt") return sup_u_alt(f, alpha, spec);
  if (e == "sup-ux-alt") return sup_ux_alt(f, alpha, spec);
  if (e == "con-lem-sup-uxx") return con_lem_sup_uxx(f, alpha);
  if (e == "B2-AC") return b2_ac(f, alpha);
  return b2_identity(f, alpha);
}

std::vector<AuditSpec> default_audit_entries(double alpha) {
  return {{"hardy-1"},
          {"hardy-2"},
          {"weight-xu", 0.0},
          {"weight-xu'", 2.0 / (alpha + 1.0)},
          {"sup-wx"},
          {"con-lem-sup-uxx"},
          {"B2-AC"},
          {"B2-identity"}};
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double quintic_bspline(double t) {
  if (t <= 0.0 || t >= 6.0) return 0.0;
  if (t > 3.0) t = 6.0 - t;
  // Truncated-power form; only the terms with t > k contribute.
  static constexpr double binom[] = {1, -6, 15, -20, 15, -6, 1};
  double s = 0.0;
  for (int k = 0; k < 6 && t > k; ++k) {
    const double d = t - k;
    s += binom[k] * d * d * d * d * d;
  }
  return s / 120.0;
}

RandomSpline::RandomSpline(std::mt19937_64& rng, double L) {
  const int m = 1 + static_cast<int>(uniform01(rng) * 6.0);
  x_lo_ = L * (0.02 + 0.18 * uniform01(rng));
  const double room = 0.9 * L - x_lo_;
  const double d_max = room / (m + 5);
  d_ = d_max * (0.25 + 0.75 * uniform01(rng));
  coeffs_.resize(m);
  for (auto& c : coeffs_) c = 2.0 * uniform01(rng) - 1.0;
}

RandomSpline::RandomSpline(double x_lo, double knot_spacing, std::vector<double> coefficients)
    : x_lo_(x_lo), d_(knot_spacing), coeffs_(std::move(coefficients)) {
  if (!(x_lo_ > 0.0) || !(d_ > 0.0) || coeffs_.empty()) {
    throw ConfigError("spline: need x_lo > 0, knot spacing > 0 and at least one coefficient");
  }
}

double RandomSpline::support_end() const {
  return x_lo_ + d_ * static_cast<double>(coeffs_.size() + 5);
}

double RandomSpline::operator()(double x) const {
  const double t = (x - x_lo_) / d_;
  if (t <= 0.0 || t >= static_cast<double>(coeffs_.size() + 5)) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < coeffs_.size(); ++k) s += coeffs_[k] * quintic_bspline(t - k);
  return s;
}

AuditStudy run_audit_study(const AuditStudyOptions& o) {
  if (o.count < 1) throw ConfigError("count: must be positive");
  if (o.refinements < 0) throw ConfigError("refinements: must be >= 0");
  const auto entries = o.entries.empty() ? default_audit_entries(o.alpha) : o.entries;

  std::mt19937_64 rng(o.seed);
  std::vector<RandomSpline> family;
  family.reserve(o.count);
  for (int i = 0; i < o.count; ++i) family.emplace_back(rng, o.L);

  const int levels = o.refinements + 1;
  const std::size_t per_level = static_cast<std::size_t>(o.count) * entries.size();
  AuditStudy study;
  study.rows.resize(per_level * levels);
  for (int level = 0; level < levels; ++level) {
    const int n = o.n_cells << level;
    const auto grid = Grid::graded(o.L, n, o.grading);
    std::vector<std::exception_ptr> errors(o.count);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < o.count; ++i) {
      try {
        const auto u = GridField::sample(grid, family[i]);
        for (std::size_t k = 0; k < entries.size(); ++k) {
          auto& row = study.rows[level * per_level + i * entries.size() + k];
          row.report = inequality_audit(u, o.alpha, entries[k], o.fit_window, o.tol_fit);
          row.field = i;
          row.n_cells = n;
          row.refinement_level = level;
          row.alpha = o.alpha;
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (std::size_t k = 0; k < entries.size(); ++k) {
    AuditEntrySummary s;
    s.entry = entries[k].entry;
    s.identity = s.entry == "B2-identity";
    for (int level = 0; level < levels; ++level) {
      double m = 0.0;
      for (int i = 0; i < o.count; ++i) {
        const auto& r = study.rows[level * per_level + i * entries.size() + k].report;
        if (r.skipped || r.degenerate) continue;
        if (!std::isfinite(r.ratio)) s.all_finite = false;
        m = std::max(m, r.ratio);
      }
      s.max_ratio.push_back(m);
      if (level > 0) {
        const double prev = s.max_ratio[level - 1];
        const double change = prev > 0.0 ? std::abs(m - prev) / prev : (m > 0.0 ? 1.0 : 0.0);
        s.max_relative_change = std::max(s.max_relative_change, change);
      }
    }
    study.summaries.push_back(std::move(s));
  }
  return study;
}

}  // namespace tfe
