#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aphlab/coeff_field.hpp"
#include "aphlab/errors.hpp"

namespace aphlab {

/// Ordered key/value text: one `key = value` per line, `#` comments, values may
/// be space-separated lists. Repeated keys are kept in order (mode blocks).
struct KeyValueConfig {
  std::vector<std::pair<std::string, std::string>> items;

  static KeyValueConfig parse_string(const std::string& text) {
    KeyValueConfig kv;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      kv.items.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
    }
    return kv;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str());
  }

  bool has(const std::string& key) const {
    for (const auto& [k, v] : items)
      if (k == key) return true;
    return false;
  }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    for (const auto& [k, v] : items)
      if (k == key) return v;
    return fallback;
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return std::stod(get(key));
  }

  double require_double(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing key " + key);
    return std::stod(get(key));
  }

  int get_int(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    return std::stoi(get(key));
  }

  std::vector<double> get_list(const std::string& key) const {
    std::vector<double> out;
    std::istringstream is(get(key));
    double v;
    while (is >> v) out.push_back(v);
    return out;
  }
};

/// Field description: field.d/m/n/mu, field.constant (entries row-major over
/// (alpha,beta,i,j), multi-indices lexicographic on exponent tuples), then per
/// mode a `mode.freq` line (d reals) followed by `mode.phase` / `mode.amp`.
inline CoeffField field_from_config(const KeyValueConfig& kv, const std::string& prefix = "field.") {
  CoeffField f;
  f.d = kv.get_int(prefix + "d", 1);
  f.m = kv.get_int(prefix + "m", 1);
  f.n = kv.get_int(prefix + "n", 1);
  f.mu = kv.require_double(prefix + "mu");
  f.id = kv.get(prefix + "id", "field");
  {
    std::istringstream is(kv.get(prefix + "constant"));
    double v;
    while (is >> v) f.constant_part.push_back(v);
  }
  if (f.constant_part.empty()) f.constant_part.assign(f.entries(), 0.0);
  const std::string mode_prefix = prefix == "field." ? "mode." : prefix + "mode.";
  CoeffMode cur;
  bool open = false;
  for (const auto& [k, v] : kv.items) {
    if (k == mode_prefix + "freq") {
      if (open) f.modes.push_back(cur);
      cur = CoeffMode{};
      open = true;
      std::istringstream is(v);
      double x;
      while (is >> x) cur.freq.push_back(x);
    } else if (k == mode_prefix + "phase" && open) {
      cur.phase = std::stod(v);
    } else if (k == mode_prefix + "amp" && open) {
      std::istringstream is(v);
      double x;
      while (is >> x) cur.amp.push_back(x);
    }
  }
  if (open) f.modes.push_back(cur);
  for (auto& mo : f.modes)
    if (mo.amp.empty()) mo.amp.assign(f.entries(), 0.0);
  f.validate();
  return f;
}

}  // namespace aphlab
