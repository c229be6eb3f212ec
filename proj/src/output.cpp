#include "tfe/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "tfe/flux.hpp"

namespace tfe {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (filled_ == columns_) throw std::logic_error(path_ + ": too many cells in row");
  out_ << (filled_++ ? "," : "") << s;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }
CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }
CsvWriter& CsvWriter::empty() { return cell(std::string{}); }

void CsvWriter::end_row() {
  if (filled_ != columns_) throw std::logic_error(path_ + ": incomplete row");
  out_ << '\n';
  filled_ = 0;
  if (!out_) throw std::runtime_error("write failed: " + path_);
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

void write_summary_csv(const std::string& path, const Trajectory& traj,
                       const std::vector<ContactLinePoint>& path_Y0) {
  CsvWriter csv(path, {"step", "t_rescaled", "t_original", "A", "B", "C", "a", "c",
                       "fit_residual", "coeff_resolved", "Y0", "V_contact", "V_sup",
                       "el_residual", "el_floor", "newton_iterations", "weak_lhs", "weak_rhs",
                       "weak_margin", "max_lhs", "max_rhs", "max_margin", "sum_hB",
                       "sup_weighted_u", "sup_weighted_du"});
  for (std::size_t j = 0; j < traj.steps.size(); ++j) {
    const auto& s = traj.steps[j];
    csv.cell(s.step)
        .cell(s.t)
        .cell(original_time(s.t, traj.params.alpha))
        .cell(s.A)
        .cell(s.B)
        .cell(s.C)
        .cell(s.a_coeff)
        .cell(s.c_coeff)
        .cell(s.fit_residual)
        .cell(s.coeff_resolved ? 1 : 0)
        .cell(j < path_Y0.size() ? path_Y0[j].Y0 : 0.0)
        .cell(s.V_contact)
        .cell(s.V_sup)
        .cell(s.el_residual)
        .cell(s.el_floor)
        .cell(s.newton_iterations)
        .cell(s.ledger_weak.lhs)
        .cell(s.ledger_weak.rhs)
        .cell(s.ledger_weak.margin())
        .cell(s.ledger_max.lhs)
        .cell(s.ledger_max.rhs)
        .cell(s.ledger_max.margin())
        .cell(s.sum_hB)
        .cell(s.sup_weighted_u)
        .cell(s.sup_weighted_du);
    csv.end_row();
  }
}

void write_profile_csv(const std::string& path, const GridField& u, double alpha, double Y0,
                       int fit_window, double tol_fit) {
  const auto profile = von_mises_reconstruct(u, Y0, 0.0, alpha);
  const auto vel = velocity_field(u, alpha, fit_window, tol_fit);
  const auto x = u.grid()->nodes();
  CsvWriter csv(path, {"x", "u", "F", "Y", "V"});
  for (std::size_t i = 0; i < u.size(); ++i) {
    csv.cell(x[i]).cell(u[i]).cell(std::sqrt(1.0 + u[i])).cell(profile.Y[i]).cell(vel.V[i]);
    csv.end_row();
  }
}

void write_audit_csv(const std::string& path, const AuditStudy& study) {
  CsvWriter csv(path, {"entry", "field", "alpha", "beta", "p", "nu", "lhs", "rhs", "ratio",
                       "degenerate", "n_cells", "refinement_level"});
  for (const auto& row : study.rows) {
    const auto& r = row.report;
    csv.cell(r.name).cell(row.field).cell(row.alpha);
    for (const char* key : {"beta", "p", "nu"}) {
      if (auto it = r.parameters.find(key); it != r.parameters.end()) {
        csv.cell(it->second);
      } else {
        csv.empty();
      }
    }
    csv.cell(r.lhs)
        .cell(r.rhs)
        .cell(r.ratio)
        .cell(r.degenerate ? 1 : 0)
        .cell(row.n_cells)
        .cell(row.refinement_level);
    csv.end_row();
  }
}

}  // namespace tfe
