#pragma once

#include <string>
#include <vector>

#include "aphlab/errors.hpp"

namespace aphlab {

/// Exponent tuple (a_1,...,a_d) with |a| = sum a_k.
struct MultiIndex {
  std::vector<int> entries;

  int dim() const { return static_cast<int>(entries.size()); }

  int order() const {
    int s = 0;
    for (int e : entries) s += e;
    return s;
  }

  bool operator==(const MultiIndex& o) const { return entries == o.entries; }
  bool operator<(const MultiIndex& o) const { return entries < o.entries; }

  std::string str() const {
    std::string s = "(";
    for (size_t k = 0; k < entries.size(); ++k) {
      if (k) s += ",";
      s += std::to_string(entries[k]);
    }
    return s + ")";
  }

  /// All multi-indices of order m in dimension d, lexicographic on exponent tuples.
  static std::vector<MultiIndex> all_of_order(int d, int m) {
    if (d < 1 || m < 0) throw ConfigError("all_of_order needs d >= 1, m >= 0");
    std::vector<MultiIndex> out;
    std::vector<int> cur(d, 0);
    enumerate(d, m, 0, cur, out);
    return out;
  }

 private:
  static void enumerate(int d, int rem, int pos, std::vector<int>& cur, std::vector<MultiIndex>& out) {
    if (pos == d - 1) {
      cur[pos] = rem;
      out.push_back(MultiIndex{cur});
      return;
    }
    for (int e = 0; e <= rem; ++e) {
      cur[pos] = e;
      enumerate(d, rem - e, pos + 1, cur, out);
    }
  }
};

/// Number of multi-indices of order m in d dimensions: C(m+d-1, d-1).
inline int count_of_order(int d, int m) {
  long long c = 1;
  for (int k = 1; k <= d - 1; ++k) c = c * (m + k) / k;
  return static_cast<int>(c);
}

}  // namespace aphlab
