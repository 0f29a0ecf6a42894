#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "aphlab/config.hpp"
#include "aphlab/experiments.hpp"
#include "aphlab/export.hpp"
#include "aphlab/report.hpp"

using namespace aphlab;

namespace {

const char* periodic_cfg = R"(
# periodic scalar field a(y) = 2 + cos(2 pi y)
field.d = 1
field.m = 1
field.n = 1
field.mu = 0.3333333333333333
field.id = periodic_2pcos
field.constant = 2.0
mode.freq = 6.283185307179586
mode.phase = 0.0
mode.amp = 1.0
)";

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("key/value config parsing") {
  auto kv = KeyValueConfig::parse_string("a = 1\n# comment\nlist = 1 2 4\nname = hi there\n");
  CHECK(kv.get_int("a", 0) == 1);
  CHECK(kv.get_list("list") == std::vector<double>{1, 2, 4});
  CHECK(kv.get("name") == "hi there");
  CHECK(kv.get_double("missing", 7.5) == 7.5);
  CHECK_THROWS_AS(KeyValueConfig::parse_string("novalue\n"), ConfigError);
}

TEST_CASE("field from config") {
  auto kv = KeyValueConfig::parse_string(periodic_cfg);
  auto f = field_from_config(kv);
  CHECK(f.d == 1);
  CHECK(f.m == 1);
  CHECK(f.mu == doctest::Approx(1.0 / 3));
  REQUIRE(f.modes.size() == 1);
  CHECK(f.modes[0].freq[0] == doctest::Approx(2 * M_PI));
  double y = 0.0, v;
  f.eval(&y, &v);
  CHECK(v == doctest::Approx(3.0));
}

TEST_CASE("report: empty -> header-only CSV") {
  ExperimentReport rep;
  rep.kind = "rho";
  rep.columns = {"L", "R", "rho"};
  auto csv = report_to_csv(rep);
  CHECK(csv == "schema_version,status,L,R,rho\n");
}

TEST_CASE("exit codes: 0 clean, 2 inconclusive, 1 failure") {
  ExperimentReport rep;
  rep.kind = "demo";
  rep.columns = {"x"};
  rep.add_row({"1"});
  CHECK(rep.exit_code() == 0);
  rep.add_row({"2"}, RowStatus::inconclusive);
  CHECK(rep.exit_code() == 2);
  rep.add_assertion("bad", false, "");
  CHECK(rep.exit_code() == 1);
}

TEST_CASE("report: JSON round trip is byte-identical") {
  ExperimentReport rep;
  rep.kind = "rho";
  rep.columns = {"L", "rho"};
  rep.add_env("version", version_string());
  rep.add_row({num_str(1.0), num_str(0.12345678901234567)});
  rep.add_row({num_str(2.0), num_str(3e-17)}, RowStatus::inconclusive);
  rep.add_summary("theta_hat", 1.5);
  rep.add_assertion("demo", true, "ok");
  auto j1 = report_to_json(rep).dump(2);
  auto rep2 = report_from_json(nlohmann::ordered_json::parse(j1));
  auto j2 = report_to_json(rep2).dump(2);
  CHECK(j1 == j2);
}

TEST_CASE("determinism: identical spec + seed gives byte-identical CSV and JSON") {
  auto kv = KeyValueConfig::parse_string(std::string(periodic_cfg) +
                                         "L_list = 1 2 4\ncheck.periodic_zero = 1\n"
                                         "sampler.center_samples = 8\nsampler.shift_candidates = 16\n"
                                         "sampler.ball_quadrature = 16\n");
  auto spec = spec_from_config(kv, "rho");
  auto r1 = run_rho_decay(spec);
  auto r2 = run_rho_decay(spec);
  CHECK(report_to_csv(r1) == report_to_csv(r2));
  CHECK(report_to_json(r1).dump() == report_to_json(r2).dump());
  CHECK(r1.all_pass());
  CHECK(r1.exit_code() == 0);
}

TEST_CASE("rho experiment: synthetic injection recovers the exponent") {
  auto kv = KeyValueConfig::parse_string(std::string(periodic_cfg) +
                                         "L_list = 1 2 4 8\nrho.synthetic = 1\n"
                                         "rho.synthetic_exponent = 2.0\ncheck.synthetic = 1\n");
  auto spec = spec_from_config(kv, "rho");
  auto rep = run_rho_decay(spec);
  CHECK(rep.all_pass());
  bool found = false;
  for (auto& [k, v] : rep.summary)
    if (k == "theta_hat") {
      CHECK(std::stod(v) == doctest::Approx(2.0).epsilon(1e-6));
      found = true;
    }
  CHECK(found);
}

TEST_CASE("rho experiment: periodic field gives the inf sentinel") {
  auto kv = KeyValueConfig::parse_string(std::string(periodic_cfg) +
                                         "L_list = 1 2 4\ncheck.periodic_zero = 1\n"
                                         "sampler.center_samples = 8\nsampler.shift_candidates = 16\n"
                                         "sampler.ball_quadrature = 16\n");
  auto rep = run_rho_decay(spec_from_config(kv, "rho"));
  CHECK(rep.all_pass());
  for (auto& [k, v] : rep.summary)
    if (k == "theta_hat") CHECK(v == "inf");
}

TEST_CASE("emit writes csv/json/svg; growth svg has one series per l plus cauchy") {
  auto kv = KeyValueConfig::parse_string(std::string(periodic_cfg) +
                                         "T_list = 4 8\ncorr.extent = 2\ncorr.n = 128\n"
                                         "solver.rel_tol = 1e-9\n");
  auto spec = spec_from_config(kv, "growth");
  auto rep = run_corrector_growth(spec);
  auto dir = std::filesystem::temp_directory_path() / "aphlab_emit_test";
  std::filesystem::create_directories(dir);
  emit(rep, dir.string());
  CHECK(std::filesystem::exists(dir / "growth.csv"));
  CHECK(std::filesystem::exists(dir / "growth.json"));
  CHECK(std::filesystem::exists(dir / "growth.svg"));
  auto svg = slurp((dir / "growth.svg").string());
  size_t count = 0, pos = 0;
  while ((pos = svg.find("class=\"series\"", pos)) != std::string::npos) {
    ++count;
    pos += 10;
  }
  // grad0, grad1 (m=1), cauchy
  CHECK(count == 3);
  auto csv = slurp((dir / "growth.csv").string());
  CHECK(csv.find("schema_version") == 0);
}

TEST_CASE("converge experiment on the constant field is degenerate-clean") {
  KeyValueConfig kv = KeyValueConfig::parse_string(
      "field.d = 1\nfield.m = 1\nfield.n = 1\nfield.mu = 1.0\nfield.id = const\n"
      "field.constant = 1.0\neps_list = 0.125 0.0625\nhfac = 16\n"
      "ahat.extent = 1\nahat.n = 64\nahat.T = 16\nsolver.rel_tol = 1e-10\n");
  auto spec = spec_from_config(kv, "converge");
  auto rep = run_converge(spec);
  CHECK(rep.all_pass());
  bool deg = false;
  for (auto& [k, v] : rep.summary)
    if (k == "fit" && v == "degenerate") deg = true;
  CHECK(deg);
}

TEST_CASE("corrector bundle and Ahat JSON export") {
  auto kv = KeyValueConfig::parse_string(periodic_cfg);
  auto f = field_from_config(kv);
  TorusGrid g{1, 1.0, 64};
  SolverConfig cfg;
  cfg.prec = SolverConfig::Prec::symbol;
  auto set = solve_approx_corrector(f, 8.0, g, cfg);
  auto dir = std::filesystem::temp_directory_path() / "aphlab_export_test";
  export_corrector_set(set, dir.string(), true);
  CHECK(std::filesystem::exists(dir / "corrector_meta.json"));
  CHECK(std::filesystem::exists(dir / "chi_g0_l0.csv"));
  auto meta = nlohmann::ordered_json::parse(slurp((dir / "corrector_meta.json").string()));
  CHECK(meta["field_id"] == "periodic_2pcos");
  CHECK(meta["entries"].size() == 1);
  CHECK(meta["entries"][0]["iterations"].get<int>() >= 1);

  auto H = compute_Ahat(f, set);
  auto j = ahat_to_json(H);
  CHECK(j["values"].size() == 1);
  CHECK(j["alphas"][0][0] == 1);

  write_binary(set.chi_of(0, 0), (dir / "chi.bin").string());
  CHECK(std::filesystem::file_size(dir / "chi.bin") ==
        sizeof(double) * (4 + set.chi_of(0, 0).values.size()));
}

TEST_CASE("flux experiment end to end on the periodic field") {
  auto kv = KeyValueConfig::parse_string(std::string(periodic_cfg) +
                                         "T_list = 8\ncorr.extent = 1\ncorr.n = 128\n"
                                         "solver.rel_tol = 1e-9\n");
  auto rep = run_flux_identity(spec_from_config(kv, "flux"));
  INFO(report_to_csv(rep));
  CHECK(rep.all_pass());
}
