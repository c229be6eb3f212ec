#include "tfe/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace tfe {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Full: return "full";
    case Mode::LeadingOrderOnly: return "leading-order-only";
    case Mode::Audit: return "audit";
    case Mode::KernelTest: return "kernel-test";
    case Mode::Sweep: return "sweep";
  }
  return "full";
}

Mode parse_mode(const std::string& s) {
  if (s == "full") return Mode::Full;
  if (s == "leading-order-only") return Mode::LeadingOrderOnly;
  if (s == "audit") return Mode::Audit;
  if (s == "kernel-test") return Mode::KernelTest;
  if (s == "sweep") return Mode::Sweep;
  throw ConfigError("mode: unknown value '" + s +
                    "' (expected full, leading-order-only, audit, kernel-test or sweep)");
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw ConfigError(key + ": '" + v + "' is not a number");
  return d;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long n = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": '" + v + "' is not an integer");
  }
  return n;
}

int to_int(const std::string& key, const std::string& v) {
  const long long n = to_integer(key, v);
  if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) {
    throw ConfigError(key + ": value out of range");
  }
  return static_cast<int>(n);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& v)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const char* key, double Parameters::*field) {
      t[key] = [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.parameters.*field = to_double(k, v);
      };
    };
    real("alpha", &Parameters::alpha);
    real("h", &Parameters::h);
    real("T", &Parameters::T);
    real("L", &Parameters::L);
    real("grading", &Parameters::grading);
    real("eps_reg", &Parameters::eps_reg);
    real("tol_newton", &Parameters::tol_newton);
    real("tol_fit", &Parameters::tol_fit);
    t["n_cells"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.parameters.n_cells = to_int(k, v);
    };
    t["fit_window"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.parameters.fit_window = to_int(k, v);
    };
    auto prof = [&t](const char* key, double ProfileSpec::*field) {
      t[key] = [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.profile.*field = to_double(k, v);
      };
    };
    prof("amplitude", &ProfileSpec::amplitude);
    prof("width", &ProfileSpec::width);
    prof("slope", &ProfileSpec::slope);
    prof("cutoff_lo", &ProfileSpec::cutoff_lo);
    prof("cutoff_hi", &ProfileSpec::cutoff_hi);
    t["profile"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.profile.name = v;
    };
    t["sample_file"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.profile.sample_file = v;
    };
    t["mode"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.mode = parse_mode(v);
    };
    t["output_dir"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.output_dir = v;
    };
    t["seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      const long long s = to_integer(k, v);
      if (s < 0) throw ConfigError(k + ": must be nonnegative");
      c.seed = static_cast<std::uint64_t>(s);
    };
    auto run_real = [&t](const char* key, double RunConfig::*field) {
      t[key] = [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.*field = to_double(k, v);
      };
    };
    run_real("smallness_gate", &RunConfig::smallness_gate);
    run_real("beta1", &RunConfig::beta1);
    run_real("decay_reference_time", &RunConfig::decay_reference_time);
    run_real("audit_L", &RunConfig::audit_L);
    run_real("kernel_window_lo", &RunConfig::kernel_window_lo);
    run_real("kernel_window_hi", &RunConfig::kernel_window_hi);
    t["beta2"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.beta2 = to_double(k, v);
    };
    auto run_int = [&t](const char* key, int RunConfig::*field) {
      t[key] = [field](RunConfig& c, const std::string& k, const std::string& v) {
        c.*field = to_int(k, v);
      };
    };
    run_int("record_every", &RunConfig::record_every);
    run_int("checkpoint_every", &RunConfig::checkpoint_every);
    run_int("max_newton_iter", &RunConfig::max_newton_iter);
    run_int("audit_count", &RunConfig::audit_count);
    run_int("audit_refinements", &RunConfig::audit_refinements);
    t["audit_entries"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.audit_entries = parse_audit_entries(v);
    };
    t["kernel_levels"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.kernel_levels.clear();
      for (const auto& s : split(v, ',')) c.kernel_levels.push_back(to_int(k, s));
    };
    t["sweep_h"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.sweep_h.clear();
      for (const auto& s : split(v, ',')) c.sweep_h.push_back(to_double(k, s));
    };
    t["sweep_n_cells"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.sweep_n_cells.clear();
      for (const auto& s : split(v, ',')) c.sweep_n_cells.push_back(to_int(k, s));
    };
    return t;
  }();
  return table;
}

}  // namespace

std::vector<AuditSpec> parse_audit_entries(const std::string& s) {
  std::vector<AuditSpec> out;
  const auto& catalog = audit_catalog();
  for (const auto& item : split(s, ',')) {
    const auto parts = split(item, ':');
    AuditSpec spec;
    spec.entry = parts.at(0);
    if (std::find(catalog.begin(), catalog.end(), spec.entry) == catalog.end()) {
      throw ConfigError("audit_entries: unknown entry '" + spec.entry + "'");
    }
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const auto eq = parts[i].find('=');
      if (eq == std::string::npos) throw ConfigError("audit_entries: malformed '" + parts[i] + "'");
      const std::string k = parts[i].substr(0, eq);
      const double v = to_double("audit_entries", parts[i].substr(eq + 1));
      if (k == "beta") spec.beta = v;
      else if (k == "p") spec.p = v;
      else if (k == "nu") spec.nu = v;
      else throw ConfigError("audit_entries: unknown exponent '" + k + "'");
    }
    out.push_back(std::move(spec));
  }
  return out;
}

void RunConfig::validate() const {
  parameters.validate();
  static const std::set<std::string> profiles{"bump", "kernel", "spline-random", "sample-file"};
  if (!profiles.count(profile.name)) {
    throw ConfigError("profile: unknown '" + profile.name +
                      "' (expected bump, kernel, spline-random or sample-file)");
  }
  if (profile.name == "sample-file" && profile.sample_file.empty()) {
    throw ConfigError("sample_file: required when profile = sample-file");
  }
  if (!std::isfinite(profile.amplitude)) throw ConfigError("amplitude: must be finite");
  if (!(profile.width > 0.0)) throw ConfigError("width: must be positive");
  if (!(profile.cutoff_lo > 0.0 && profile.cutoff_hi > profile.cutoff_lo)) {
    throw ConfigError("cutoff_hi: need 0 < cutoff_lo < cutoff_hi");
  }
  if (!(smallness_gate > 0.0)) throw ConfigError("smallness_gate: must be positive");
  if (record_every < 0) throw ConfigError("record_every: must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every: must be >= 0");
  if (max_newton_iter < 1) throw ConfigError("max_newton_iter: must be >= 1");
  if (audit_count < 1) throw ConfigError("audit_count: must be >= 1");
  if (audit_refinements < 0) throw ConfigError("audit_refinements: must be >= 0");
  if (!(audit_L > 0.0)) throw ConfigError("audit_L: must be positive");
  if (kernel_levels.size() < 2) throw ConfigError("kernel_levels: need at least two levels");
  for (int n : kernel_levels) {
    if (n < 8) throw ConfigError("kernel_levels: every level must be >= 8");
  }
  if (!(kernel_window_lo > 0.0 && kernel_window_hi > kernel_window_lo && kernel_window_hi <= 1.0)) {
    throw ConfigError("kernel_window_hi: need 0 < kernel_window_lo < kernel_window_hi <= 1");
  }
  for (double h : sweep_h) {
    if (!(h > 0.0)) throw ConfigError("sweep_h: every step must be positive");
  }
  for (int n : sweep_n_cells) {
    if (n < 8) throw ConfigError("sweep_n_cells: every entry must be >= 8");
  }
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::map<std::string, int> seen;
  const std::regex around_eq(R"(\s*=\s*)");
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = std::regex_replace(line, around_eq, "=");
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      const auto where = origin + ":" + std::to_string(lineno) + ": ";
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == tok.size()) {
        throw ConfigError(where + "expected key=value, got '" + tok + "'");
      }
      const std::string key = tok.substr(0, eq);
      const std::string value = tok.substr(eq + 1);
      const auto it = setters().find(key);
      if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
      if (auto prev = seen.find(key); prev != seen.end()) {
        throw ConfigError(where + "duplicate key '" + key + "' (first set on line " +
                          std::to_string(prev->second) + ")");
      }
      seen[key] = lineno;
      try {
        it->second(cfg, key, value);
      } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
      }
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace tfe
