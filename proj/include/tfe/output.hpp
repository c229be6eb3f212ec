#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "tfe/core_model.hpp"
#include "tfe/diagnostics.hpp"
#include "tfe/inequality_audit.hpp"
#include "tfe/trajectory.hpp"

namespace tfe {

/// Shortest form that still carries 17 significant digits ("%.17g");
/// non-finite values print as nan, inf, -inf.
std::string format_double(double v);

/// Comma-separated rows with a fixed header. Every value is written with
/// format_double.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(const std::string& s);
  CsvWriter& empty();
  void end_row();

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

/// t_rescaled, t_original, A, B, C, a, c, Y0, V_contact, V_sup and ledger
/// sides and margins, one row per step.
void write_summary_csv(const std::string& path, const Trajectory& traj,
                       const std::vector<ContactLinePoint>& path_Y0);

/// x, u, F, Y, V at one time.
void write_profile_csv(const std::string& path, const GridField& u, double alpha, double Y0,
                       int fit_window, double tol_fit);

void write_audit_csv(const std::string& path, const AuditStudy& study);

/// Creates the directory (and parents); errors carry the path.
void ensure_directory(const std::string& path);

}  // namespace tfe
