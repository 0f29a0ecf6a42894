#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "aphlab/errors.hpp"

namespace aphlab {

inline std::string num_str(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

enum class RowStatus { ok, failed, inconclusive };

inline const char* row_status_str(RowStatus s) {
  switch (s) {
    case RowStatus::ok: return "ok";
    case RowStatus::failed: return "failed";
    default: return "inconclusive";
  }
}

struct ReportRow {
  std::vector<std::string> cells;  // aligned with ExperimentReport::columns
  RowStatus status = RowStatus::ok;
};

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Tabular experiment output. Byte-identical CSV/JSON for identical spec+seed:
/// all numbers go through num_str, no timestamps.
struct ExperimentReport {
  std::string kind;
  int schema_version = 1;
  std::vector<std::string> columns;
  std::vector<ReportRow> rows;
  std::vector<std::pair<std::string, std::string>> environment;
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<Assertion> assertions;

  void add_row(const std::vector<std::string>& cells, RowStatus st = RowStatus::ok) {
    if (cells.size() != columns.size()) throw ShapeMismatch("report row width");
    rows.push_back({cells, st});
  }

  void add_env(const std::string& k, const std::string& v) { environment.push_back({k, v}); }
  void add_summary(const std::string& k, double v) { summary.push_back({k, num_str(v)}); }
  void add_summary_str(const std::string& k, const std::string& v) { summary.push_back({k, v}); }
  void add_assertion(const std::string& name, bool pass, const std::string& detail) {
    assertions.push_back({name, pass, detail});
  }

  bool all_pass() const {
    for (const auto& a : assertions)
      if (!a.pass) return false;
    for (const auto& r : rows)
      if (r.status == RowStatus::failed) return false;
    return true;
  }

  bool has_inconclusive() const {
    for (const auto& r : rows)
      if (r.status == RowStatus::inconclusive) return true;
    return false;
  }

  /// 0 = all assertions passed, 2 = inconclusive rows present, 1 = hard failure.
  int exit_code() const {
    if (!all_pass()) return 1;
    if (has_inconclusive()) return 2;
    return 0;
  }
};

inline std::string report_to_csv(const ExperimentReport& r) {
  std::string out = "schema_version,status";
  for (const auto& c : r.columns) out += "," + c;
  out += "\n";
  for (const auto& row : r.rows) {
    out += std::to_string(r.schema_version);
    out += ",";
    out += row_status_str(row.status);
    for (const auto& c : row.cells) out += "," + c;
    out += "\n";
  }
  return out;
}

inline nlohmann::ordered_json report_to_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = r.kind;
  j["schema_version"] = r.schema_version;
  j["environment"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.environment) j["environment"][k] = v;
  j["columns"] = r.columns;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json jr;
    jr["status"] = row_status_str(row.status);
    jr["cells"] = row.cells;
    j["rows"].push_back(jr);
  }
  j["summary"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.summary) j["summary"][k] = v;
  j["assertions"] = nlohmann::ordered_json::array();
  for (const auto& a : r.assertions) {
    nlohmann::ordered_json ja;
    ja["name"] = a.name;
    ja["pass"] = a.pass;
    ja["detail"] = a.detail;
    j["assertions"].push_back(ja);
  }
  return j;
}

inline ExperimentReport report_from_json(const nlohmann::ordered_json& j) {
  ExperimentReport r;
  r.kind = j.at("kind").get<std::string>();
  r.schema_version = j.at("schema_version").get<int>();
  for (auto it = j.at("environment").begin(); it != j.at("environment").end(); ++it)
    r.environment.push_back({it.key(), it.value().get<std::string>()});
  r.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& jr : j.at("rows")) {
    ReportRow row;
    std::string st = jr.at("status").get<std::string>();
    row.status = st == "ok" ? RowStatus::ok : (st == "failed" ? RowStatus::failed : RowStatus::inconclusive);
    row.cells = jr.at("cells").get<std::vector<std::string>>();
    r.rows.push_back(row);
  }
  for (auto it = j.at("summary").begin(); it != j.at("summary").end(); ++it)
    r.summary.push_back({it.key(), it.value().get<std::string>()});
  for (const auto& ja : j.at("assertions")) {
    Assertion a;
    a.name = ja.at("name").get<std::string>();
    a.pass = ja.at("pass").get<bool>();
    a.detail = ja.at("detail").get<std::string>();
    r.assertions.push_back(a);
  }
  return r;
}

/// One log-log series with an optional fitted line.
struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool has_fit = false;
  double fit_slope = 0, fit_intercept = 0;
};

/// Minimal standalone SVG: log-log scatter with fitted lines, one polyline per series.
inline std::string svg_loglog(const std::vector<PlotSeries>& series, const std::string& title,
                              const std::string& xlabel, const std::string& ylabel) {
  const double W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
  double lxmin = 1e300, lxmax = -1e300, lymin = 1e300, lymax = -1e300;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0) || !(s.y[i] > 0)) continue;
      lxmin = std::min(lxmin, std::log10(s.x[i]));
      lxmax = std::max(lxmax, std::log10(s.x[i]));
      lymin = std::min(lymin, std::log10(s.y[i]));
      lymax = std::max(lymax, std::log10(s.y[i]));
    }
  if (lxmin > lxmax) { lxmin = 0; lxmax = 1; }
  if (lymin > lymax) { lymin = 0; lymax = 1; }
  if (lxmax - lxmin < 1e-12) lxmax = lxmin + 1;
  if (lymax - lymin < 1e-12) lymax = lymin + 1;
  auto X = [&](double x) { return ml + (std::log10(x) - lxmin) / (lxmax - lxmin) * (W - ml - mr); };
  auto Y = [&](double y) { return H - mb - (std::log10(y) - lymin) / (lymax - lymin) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\">\n";
  s += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + title + "</text>\n";
  s += "<text x=\"320\" y=\"470\" text-anchor=\"middle\" font-size=\"12\">" + xlabel + " (log)</text>\n";
  s += "<text x=\"16\" y=\"240\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 240)\">" +
       ylabel + " (log)</text>\n";
  s += "<rect x=\"" + num_str(ml) + "\" y=\"" + num_str(mt) + "\" width=\"" + num_str(W - ml - mr) +
       "\" height=\"" + num_str(H - mt - mb) + "\" fill=\"none\" stroke=\"black\"/>\n";
  int ci = 0;
  for (const auto& se : series) {
    const char* col = colors[ci % 6];
    std::string pts;
    for (size_t i = 0; i < se.x.size(); ++i) {
      if (!(se.x[i] > 0) || !(se.y[i] > 0)) continue;
      pts += num_str(X(se.x[i])) + "," + num_str(Y(se.y[i])) + " ";
      s += "<circle cx=\"" + num_str(X(se.x[i])) + "\" cy=\"" + num_str(Y(se.y[i])) +
           "\" r=\"3\" fill=\"" + col + "\"/>\n";
    }
    s += "<polyline class=\"series\" points=\"" + pts + "\" fill=\"none\" stroke=\"" + col + "\"/>\n";
    if (se.has_fit && !se.x.empty()) {
      double x0 = se.x.front(), x1 = se.x.back();
      double y0 = std::exp(se.fit_intercept + se.fit_slope * std::log(x0));
      double y1 = std::exp(se.fit_intercept + se.fit_slope * std::log(x1));
      s += "<line x1=\"" + num_str(X(x0)) + "\" y1=\"" + num_str(Y(y0)) + "\" x2=\"" + num_str(X(x1)) +
           "\" y2=\"" + num_str(Y(y1)) + "\" stroke=\"" + col + "\" stroke-dasharray=\"5,3\"/>\n";
    }
    s += "<text x=\"" + num_str(W - mr - 6) + "\" y=\"" + num_str(mt + 16 + 14 * ci) +
         "\" text-anchor=\"end\" font-size=\"11\" fill=\"" + std::string(col) + "\">" + se.label +
         "</text>\n";
    ++ci;
  }
  s += "</svg>\n";
  return s;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

}  // namespace aphlab
