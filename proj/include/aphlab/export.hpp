#pragma once

#include <filesystem>
#include <fstream>

#include "aphlab/corrector.hpp"
#include "aphlab/report.hpp"

namespace aphlab {

/// Flat binary dump: header doubles (d, extent, n_per_dim, components) then the
/// node-major values. Debugging aid, not a stability-guaranteed format.
inline void write_binary(const GridField& u, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  double hdr[4] = {double(u.grid.d), u.grid.extent, double(u.grid.n_per_dim), double(u.components)};
  f.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  f.write(reinterpret_cast<const char*>(u.values.data()), sizeof(double) * u.values.size());
}

/// Homogenized tensor as JSON, entries flat in the documented (alpha,beta,i,j)
/// row-major order with lexicographic multi-index enumeration.
inline nlohmann::ordered_json ahat_to_json(const HomogenizedTensor& H) {
  nlohmann::ordered_json j;
  j["d"] = H.d;
  j["m"] = H.m;
  j["n"] = H.n;
  j["multi_index_order"] = "lexicographic on exponent tuples";
  j["entry_order"] = "(alpha,beta,i,j) row-major";
  nlohmann::ordered_json idx = nlohmann::ordered_json::array();
  for (const auto& a : MultiIndex::all_of_order(H.d, H.m)) idx.push_back(a.entries);
  j["alphas"] = idx;
  nlohmann::ordered_json vals = nlohmann::ordered_json::array();
  for (double v : H.values) vals.push_back(num_str(v));
  j["values"] = vals;
  j["provenance"]["field_id"] = H.field_id;
  j["provenance"]["T"] = num_str(H.T);
  j["provenance"]["grid_h"] = num_str(H.grid_h);
  j["provenance"]["grid_extent"] = num_str(H.grid_extent);
  j["checks"]["bound_ok"] = H.bound_ok;
  j["checks"]["coercive_ok"] = H.coercive_ok;
  j["checks"]["min_eigen"] = num_str(H.min_eigen);
  return j;
}

/// Corrector bundle: metadata JSON (field id, T, grid, per-entry residuals)
/// plus optional per-index CSV dumps of the chi fields.
inline void export_corrector_set(const CorrectorSet& set, const std::string& dir,
                                 bool dump_fields = false) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["field_id"] = set.field_id;
  j["d"] = set.d;
  j["m"] = set.m;
  j["n"] = set.n;
  j["T"] = num_str(set.T);
  j["grid"]["extent"] = num_str(set.grid.extent);
  j["grid"]["n_per_dim"] = set.grid.n_per_dim;
  j["grid"]["h"] = num_str(set.grid.h());
  j["rel_tol"] = num_str(set.rel_tol);
  auto alphas = MultiIndex::all_of_order(set.d, set.m);
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (int g = 0; g < set.mbar(); ++g)
    for (int l = 0; l < set.n; ++l) {
      const auto& r = set.reports[g * set.n + l];
      nlohmann::ordered_json e;
      e["gamma"] = alphas[g].entries;
      e["l"] = l;
      e["iterations"] = r.iterations;
      e["rel_residual"] = num_str(r.rel_residual);
      e["rhs_norm"] = num_str(r.rhs_norm);
      entries.push_back(e);
    }
  j["entries"] = entries;
  write_file(dir + "/corrector_meta.json", j.dump(2) + "\n");
  if (dump_fields) {
    for (int g = 0; g < set.mbar(); ++g)
      for (int l = 0; l < set.n; ++l) {
        std::ofstream f(dir + "/chi_g" + std::to_string(g) + "_l" + std::to_string(l) + ".csv");
        set.chi_of(g, l).to_csv(f);
      }
  }
}

}  // namespace aphlab
