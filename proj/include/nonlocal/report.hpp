#pragma once

// Report plumbing for the batch front end: named rows, CSV emission with a
// fixed header, and the JSON run summary.  Formatting is pinned (printf %.12e,
// sorted JSON keys) so identical runs produce byte-identical files.

#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace nonlocal {

// One measured quantity.  `residual` is what gets compared against the
// tolerance (deviation from a target, absolute residual, ...); it defaults to
// |value| and feeds the summary's worst_residual.  Rows that merely record a
// number use tolerance = inf and pass = finite.
struct ReportRow {
  std::string name;
  double value = 0.0;
  double error_estimate = 0.0;
  double tolerance = std::numeric_limits<double>::infinity();
  bool pass = true;
  double residual = std::numeric_limits<double>::quiet_NaN();

  double residual_or_default() const {
    return std::isnan(residual) ? std::abs(value) : residual;
  }
};

struct RunReport {
  std::string command;
  std::vector<ReportRow> rows;

  // Record a number without checking it beyond finiteness.
  ReportRow& record(const std::string& name, double value, double error = 0.0) {
    rows.push_back({name, value, error,
                    std::numeric_limits<double>::infinity(),
                    std::isfinite(value), value == 0.0 ? 0.0 : std::abs(value)});
    return rows.back();
  }

  // |value| must stay below tol.
  ReportRow& check_small(const std::string& name, double value, double error,
                         double tol) {
    rows.push_back({name, value, error, tol,
                    std::isfinite(value) && std::abs(value) <= tol,
                    std::abs(value)});
    return rows.back();
  }

  // |value - target| must stay below tol.
  ReportRow& check_near(const std::string& name, double value, double target,
                        double error, double tol) {
    double dev = std::abs(value - target);
    rows.push_back({name, value, error, tol, std::isfinite(value) && dev <= tol,
                    dev});
    return rows.back();
  }

  // value must reach at least the bound (fitted exponents, margins).
  ReportRow& check_at_least(const std::string& name, double value, double bound,
                            double error = 0.0) {
    rows.push_back({name, value, error, bound,
                    std::isfinite(value) && value >= bound,
                    std::max(0.0, bound - value)});
    return rows.back();
  }

  bool pass() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return true;
  }

  int failed_count() const {
    int k = 0;
    for (const auto& r : rows)
      if (!r.pass) ++k;
    return k;
  }

  double worst_residual() const {
    double w = 0.0;
    for (const auto& r : rows) w = std::max(w, r.residual_or_default());
    return w;
  }

  const ReportRow* first_failure() const {
    for (const auto& r : rows)
      if (!r.pass) return &r;
    return nullptr;
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12e", v);
  return buf;
}

}  // namespace detail

inline std::string to_csv(const RunReport& rep) {
  std::string out = "name,value,error_estimate,tolerance,pass\n";
  for (const auto& r : rep.rows) {
    out += r.name;
    out += ',';
    out += detail::fmt_double(r.value);
    out += ',';
    out += detail::fmt_double(r.error_estimate);
    out += ',';
    out += detail::fmt_double(r.tolerance);
    out += ',';
    out += r.pass ? "pass" : "fail";
    out += '\n';
  }
  return out;
}

inline nlohmann::json to_summary(const RunReport& rep) {
  nlohmann::json j;
  j["command"] = rep.command;
  j["pass"] = rep.pass();
  j["counts"] = {{"total", (int)rep.rows.size()},
                 {"passed", (int)rep.rows.size() - rep.failed_count()},
                 {"failed", rep.failed_count()}};
  // inf is not representable in JSON; an all-informational report has no
  // residual to speak of.
  double w = rep.worst_residual();
  j["worst_residual"] = std::isfinite(w) ? w : 0.0;
  return j;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline void write_reports(const RunReport& rep, const std::string& dir) {
  std::string base = dir.empty() ? std::string(".") : dir;
  write_file(base + "/" + rep.command + "_report.csv", to_csv(rep));
  write_file(base + "/" + rep.command + "_summary.json",
             to_summary(rep).dump(2) + "\n");
}

}  // namespace nonlocal
