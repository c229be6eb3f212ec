#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "tfe/config.hpp"
#include "tfe/inequality_audit.hpp"

namespace tfe {

namespace {

double bump_psi(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

std::vector<std::pair<double, double>> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("sample_file: cannot open " + path);
  std::vector<std::pair<double, double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream s(line);
    double x, u;
    if (!(s >> x)) continue;  // blank or header line
    if (!(s >> u)) {
      throw ConfigError("sample_file: " + path + ":" + std::to_string(lineno) +
                        ": expected two columns x u");
    }
    if (!rows.empty() && !(x > rows.back().first)) {
      throw ConfigError("sample_file: " + path + ":" + std::to_string(lineno) +
                        ": x must be strictly increasing");
    }
    rows.emplace_back(x, u);
  }
  if (rows.size() < 2) throw ConfigError("sample_file: " + path + " needs at least two samples");
  return rows;
}

double interpolate(const std::vector<std::pair<double, double>>& rows, double x) {
  if (x <= rows.front().first || x >= rows.back().first) {
    if (x == rows.front().first) return rows.front().second;
    if (x == rows.back().first) return rows.back().second;
    return 0.0;
  }
  auto it = std::upper_bound(rows.begin(), rows.end(), x,
                             [](double v, const std::pair<double, double>& r) { return v < r.first; });
  const auto& [x1, u1] = *it;
  const auto& [x0, u0] = *std::prev(it);
  return u0 + (u1 - u0) * (x - x0) / (x1 - x0);
}

}  // namespace

double smooth_cutoff(double x, double lo, double hi) {
  if (x <= lo) return 1.0;
  if (x >= hi) return 0.0;
  const double s = (x - lo) / (hi - lo);
  const double a = bump_psi(1.0 - s);
  return a / (a + bump_psi(s));
}

GridField make_initial_profile(const ProfileSpec& spec, const GridPtr& grid, double alpha,
                               std::uint64_t seed) {
  if (spec.name == "bump") {
    const double A = spec.amplitude, l = spec.width;
    return GridField::sample(grid, [A, l](double x) {
      const double s = x / l;
      return A * s * s * std::exp(-s);
    });
  }
  if (spec.name == "kernel") {
    const double ex = kernel_exponent(alpha);
    return GridField::sample(grid, [&spec, ex](double x) {
      return (spec.amplitude * std::pow(x, ex) + spec.slope * x) *
             smooth_cutoff(x, spec.cutoff_lo, spec.cutoff_hi);
    });
  }
  if (spec.name == "spline-random") {
    std::mt19937_64 rng(seed);
    const RandomSpline s(rng, grid->length());
    const double A = spec.amplitude;
    return GridField::sample(grid, [&s, A](double x) { return A * s(x); });
  }
  if (spec.name == "sample-file") {
    const auto rows = read_samples(spec.sample_file);
    return GridField::sample(grid, [&rows](double x) { return interpolate(rows, x); });
  }
  throw ConfigError("profile: unknown '" + spec.name + "'");
}

}  // namespace tfe
