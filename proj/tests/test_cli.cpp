#include <catch2/catch_amalgamated.hpp>

#include <hflab/cli_app.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// The build exports the binary and the sample-input directory through the
// test environment; every case here drives the real executable.
std::string cli_path() {
  const char* p = std::getenv("HFLAB_CLI");
  REQUIRE(p != nullptr);
  return p;
}

std::string input_path(const std::string& name) {
  const char* d = std::getenv("HFLAB_INPUTS");
  REQUIRE(d != nullptr);
  return (fs::path(d) / name).string();
}

fs::path work_dir() {
  fs::path d = fs::temp_directory_path() / "hflab_cli_tests";
  fs::create_directories(d);
  return d;
}

fs::path work_file(const std::string& name) { return work_dir() / name; }

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Runs "<cli> <args>" with stdout/stderr captured to files, returns the exit
// code (-1 when the child did not exit normally).
int run_cli(const std::string& args, std::string* out = nullptr, std::string* err = nullptr) {
  fs::path of = work_file("stdout.txt");
  fs::path ef = work_file("stderr.txt");
  std::string cmd =
      "\"" + cli_path() + "\" " + args + " > \"" + of.string() + "\" 2> \"" + ef.string() + "\"";
  int st = std::system(cmd.c_str());
  if (out) *out = slurp(of);
  if (err) *err = slurp(ef);
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

json run_report(const std::string& args, const std::string& out_name, int expect_code = 0) {
  fs::path rp = work_file(out_name);
  int code = run_cli(args + " --out \"" + rp.string() + "\"");
  REQUIRE(code == expect_code);
  return json::parse(slurp(rp));
}

int newline_count(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("scf on the hydrogen sample reproduces the pinned minimum", "[cli]") {
  json rep = run_report("scf \"" + input_path("h_atom.json") + "\"", "h_scf.json");
  REQUIRE(rep["command"] == "scf");
  REQUIRE(rep["units"] == "paper");
  REQUIRE(rep["schema_version"] == 1);
  REQUIRE(rep["input"]["n_functions"] == 1);
  const json& res = rep["results"];
  REQUIRE(res["converged"] == true);
  REQUIRE(res["outcome"] == "converged");
  REQUIRE(res["E"].get<double>() == Catch::Approx(-0.2332916).margin(1e-5));
  REQUIRE(res["koopmans"]["residual"].get<double>() <= 1e-12);
  REQUIRE(res["koopmans"]["ionization"].get<double>() ==
          Catch::Approx(-res["E"].get<double>()).margin(1e-14));
  REQUIRE(res["orbital_energy_bound"]["satisfied"] == true);
  REQUIRE(res["enuc"].get<double>() == 0.0);
}

TEST_CASE("malformed input exits 1 with a single-line diagnostic", "[cli]") {
  fs::path bad = work_file("bad_input.json");
  std::ofstream(bad) << "{\"atoms\": [oops";
  std::string err;
  int code = run_cli("scf \"" + bad.string() + "\"", nullptr, &err);
  REQUIRE(code == 1);
  REQUIRE(!err.empty());
  REQUIRE(newline_count(err) == 1);
  REQUIRE(err.back() == '\n');

  // missing file: same contract
  code = run_cli("scf \"" + work_file("no_such_file.json").string() + "\"", nullptr, &err);
  REQUIRE(code == 1);
  REQUIRE(newline_count(err) == 1);
}

TEST_CASE("usage errors exit 1, help exits 0", "[cli]") {
  std::string err;
  REQUIRE(run_cli("", nullptr, &err) == 1);          // a subcommand is required
  REQUIRE(run_cli("scf", nullptr, &err) == 1);       // input argument is required
  REQUIRE(run_cli("scf \"" + input_path("h_atom.json") + "\" --no-such-flag", nullptr, &err) == 1);
  std::string out;
  REQUIRE(run_cli("--help", &out) == 0);
  REQUIRE(out.find("scf") != std::string::npos);
  REQUIRE(out.find("radial") != std::string::npos);
}

TEST_CASE("exit codes track the solver outcome", "[cli]") {
  // iteration cap reached -> 3, and the report is still written
  json rep = run_report("scf \"" + input_path("he_et6.json") +
                            "\" --max-iter 1 --tol-energy 1e-15 --tol-commutator 1e-15",
                        "he_maxiter.json", 3);
  REQUIRE(rep["results"]["outcome"] == "max_iter");
  REQUIRE(rep["results"]["converged"] == false);
  REQUIRE(rep["results"]["iterations"] == 1);

  // the full mapping, including oscillation, pinned at the library level
  using hflab::ScfOutcome;
  REQUIRE(hflab::cli::outcome_exit_code(ScfOutcome::converged) == 0);
  REQUIRE(hflab::cli::outcome_exit_code(ScfOutcome::oscillation) == 2);
  REQUIRE(hflab::cli::outcome_exit_code(ScfOutcome::max_iter_reached) == 3);
}

TEST_CASE("identical invocations produce byte-identical reports", "[cli]") {
  std::string in = input_path("he_et6.json");
  fs::path a = work_file("rep_a.json");
  fs::path b = work_file("rep_b.json");
  REQUIRE(run_cli("scf \"" + in + "\" --guess random --seed 7 --out \"" + a.string() + "\"") == 0);
  REQUIRE(run_cli("scf \"" + in + "\" --guess random --seed 7 --out \"" + b.string() + "\"") == 0);
  REQUIRE(slurp(a) == slurp(b));

  fs::path sa = work_file("sur_a.json");
  fs::path sb = work_file("sur_b.json");
  std::string sargs = "survey \"" + in + "\" --starts 6 --seed 3 --out \"";
  REQUIRE(run_cli(sargs + sa.string() + "\"") == 0);
  REQUIRE(run_cli(sargs + sb.string() + "\"") == 0);
  REQUIRE(slurp(sa) == slurp(sb));
}

TEST_CASE("--standard-units adds a doubled block without touching native values", "[cli]") {
  std::string in = input_path("h_atom.json");
  json plain = run_report("scf \"" + in + "\"", "h_plain.json");
  json doubled = run_report("scf \"" + in + "\" --standard-units", "h_std.json");
  REQUIRE(!plain["results"].contains("standard_units"));
  REQUIRE(doubled["results"].contains("standard_units"));
  double e = doubled["results"]["E"].get<double>();
  REQUIRE(doubled["results"]["standard_units"]["E"].get<double>() == 2.0 * e);
  REQUIRE(plain["results"]["E"].get<double>() == e);
  double eps0 = doubled["results"]["eps"][0].get<double>();
  REQUIRE(doubled["results"]["standard_units"]["eps"][0].get<double>() == 2.0 * eps0);
}

TEST_CASE("survey with one start matches scf from the same seeded frame", "[cli]") {
  std::string in = input_path("he_et6.json");
  json sur = run_report("survey \"" + in + "\" --starts 1 --seed 5", "sur1.json");
  REQUIRE(sur["results"]["n_converged"] == 1);
  REQUIRE(sur["results"]["clusters"].size() == 1);

  std::uint64_t row_seed = hflab::mix_seed(5, 0);
  json scf = run_report(
      "scf \"" + in + "\" --guess random --seed " + std::to_string(row_seed), "scf_rowseed.json");
  REQUIRE(scf["results"]["converged"] == true);
  // same frame, same iteration path: energies agree to the last bit
  REQUIRE(sur["results"]["clusters"][0]["E"].get<double>() ==
          scf["results"]["E"].get<double>());
}

TEST_CASE("an enormous census margin empties both censuses", "[cli]") {
  json rep = run_report("survey \"" + input_path("he_et6.json") +
                            "\" --starts 8 --seed 11 --epsilon 1e6",
                        "sur_huge_eps.json");
  REQUIRE(rep["results"]["gamma_census"] == 0);
  REQUIRE(rep["results"]["below_threshold_census"] == 0);
  for (const auto& c : rep["results"]["clusters"]) {
    REQUIRE(c["in_gamma"] == false);
    REQUIRE(c["below_threshold"] == false);
  }
}

TEST_CASE("hessian sweep emits three passing certificates", "[cli]") {
  json rep = run_report("hessian \"" + input_path("he_et8.json") + "\"", "hes_sweep.json");
  const json& res = rep["results"];
  double star = res["epsilon_star"].get<double>();
  REQUIRE(star > 0.0);
  REQUIRE(res["certificates"].size() == 3);
  std::vector<double> expect = {0.5 * star, star, 1.5 * star};
  for (int k = 0; k < 3; ++k) {
    const json& c = res["certificates"][k];
    REQUIRE(c["epsilon"].get<double>() == Catch::Approx(expect[k]).epsilon(1e-15));
    REQUIRE(c["l_coercive"] == true);
    REQUIRE(c["min_eig_L"].get<double>() >=
            c["half_epsilon_target"].get<double>() - 1e-8);
    REQUIRE(c["rank_table"]["rank_h2_ok"] == true);
    REQUIRE(c["rank_table"]["rank_subadditive_ok"] == true);
  }
  REQUIRE(res["fd_check"]["max_rel_err"].get<double>() <= 1e-6);
  REQUIRE(res["coupling_identity"]["max_route_dev"].get<double>() <= 1e-10);
  REQUIRE(res["coupling_identity"]["min_value"].get<double>() >= -1e-10);
  REQUIRE(res["positivity"]["global_min"].get<double>() >= -1e-10);
}

TEST_CASE("an explicit split point yields exactly one certificate", "[cli]") {
  json rep = run_report("hessian \"" + input_path("he_et6.json") + "\" --epsilon-split 0.2",
                        "hes_single.json");
  REQUIRE(rep["results"]["certificates"].size() == 1);
  REQUIRE(rep["results"]["certificates"][0]["epsilon"].get<double>() == 0.2);
}

TEST_CASE("one-orbital coupling identity vanishes identically", "[cli]") {
  json rep = run_report("hessian \"" + input_path("h_atom.json") + "\"", "hes_h.json");
  const json& rq = rep["results"]["coupling_identity"];
  REQUIRE(rq["lhs_operator"].get<double>() == 0.0);
  REQUIRE(rq["rhs_direct"].get<double>() == 0.0);
  REQUIRE(rq["rhs_pair"].get<double>() == 0.0);
  REQUIRE(rq["max_route_dev"].get<double>() == 0.0);
}

TEST_CASE("radial hydrogen at defaults matches the closed form", "[cli]") {
  json rep = run_report("radial --Z 1 --N 1", "rad_h.json");
  REQUIRE(rep["command"] == "radial");
  REQUIRE(rep["grid"]["M"] == 3200);
  const json& res = rep["results"];
  REQUIRE(res["converged"] == true);
  REQUIRE(res["eps"][0].get<double>() == Catch::Approx(-0.25).margin(1e-6));
  double slope = res["decay"]["slopes"][0].get<double>();
  REQUIRE(std::abs(slope - (-0.5)) <= 0.01 * 0.5);
  REQUIRE(res["decay"]["all_within"] == true);
  REQUIRE(res["weighted_norm"]["finite"] == true);
  REQUIRE(res["farfield"]["min_margin"].get<double>() >= 0.0);
  REQUIRE(res.contains("virial"));
}

TEST_CASE("radial helium ion pins the scaled hydrogen level", "[cli]") {
  json rep = run_report("radial --Z 2 --N 1", "rad_hep.json");
  REQUIRE(rep["results"]["eps"][0].get<double>() == Catch::Approx(-1.0).margin(1e-5));
}

TEST_CASE("radial rejects bad grids and windows with exit 1", "[cli]") {
  std::string err;
  REQUIRE(run_cli("radial --Z 1 --rmax 29", nullptr, &err) == 1);  // grid too small
  REQUIRE(newline_count(err) == 1);
  REQUIRE(run_cli("radial --Z 1 --window 5 3", nullptr, &err) == 1);  // lo >= hi
  REQUIRE(newline_count(err) == 1);
}

TEST_CASE("dump-integrals writes a loadable binary and reports its size", "[cli]") {
  fs::path bin = work_file("he.tables");
  std::string out;
  int code = run_cli("dump-integrals \"" + input_path("he_et6.json") + "\" --out \"" +
                         bin.string() + "\"",
                     &out);
  REQUIRE(code == 0);
  json rep = json::parse(out);
  REQUIRE(rep["command"] == "dump-integrals");
  REQUIRE(rep["results"]["n"] == 6);
  REQUIRE(rep["results"]["bytes"].get<std::uint64_t>() == fs::file_size(bin));

  std::ifstream is(bin, std::ios::binary);
  hflab::IntegralTables t = hflab::load_tables(is);
  REQUIRE(t.n == 6);
  REQUIRE(t.S.rows() == 6);
  REQUIRE(t.cond_S == rep["results"]["cond_S"].get<double>());
}

TEST_CASE("scf trace CSV carries one row per iteration", "[cli]") {
  fs::path csv = work_file("trace.csv");
  json rep = run_report(
      "scf \"" + input_path("he_et6.json") + "\" --trace \"" + csv.string() + "\"", "he_tr.json");
  std::istringstream is(slurp(csv));
  std::string header;
  REQUIRE(std::getline(is, header));
  REQUIRE(header == "iter,E,E_bivariate,commutator_norm,eps_1,eps_2");
  int rows = 0;
  std::string line, last;
  while (std::getline(is, line))
    if (!line.empty()) {
      ++rows;
      last = line;
    }
  REQUIRE(rows == rep["results"]["iterations"].get<int>());
  // final trace energy sits at the converged value (up to the energy tolerance)
  double e_last = std::stod(last.substr(last.find(',') + 1));
  REQUIRE(e_last == Catch::Approx(rep["results"]["E"].get<double>()).margin(1e-6));
}

TEST_CASE("survey trace CSV lists every start with its stream seed", "[cli]") {
  fs::path csv = work_file("survey.csv");
  json rep = run_report("survey \"" + input_path("h_atom.json") + "\" --starts 3 --seed 9" +
                            " --trace \"" + csv.string() + "\"",
                        "h_sur.json");
  std::istringstream is(slurp(csv));
  std::string header;
  REQUIRE(std::getline(is, header));
  REQUIRE(header == "seed,outcome,E,eps_1,residual,cluster_id");
  int rows = 0;
  std::string line;
  std::vector<std::string> seeds;
  while (std::getline(is, line))
    if (!line.empty()) {
      ++rows;
      seeds.push_back(line.substr(0, line.find(',')));
    }
  REQUIRE(rows == 3);
  for (int k = 0; k < 3; ++k)
    REQUIRE(seeds[static_cast<size_t>(k)] ==
            std::to_string(hflab::mix_seed(9, static_cast<std::uint64_t>(k))));
  REQUIRE(rep["results"]["n_starts"] == 3);
}

TEST_CASE("radial tail CSV profiles u and the cumulative charge", "[cli]") {
  fs::path csv = work_file("tail.csv");
  json rep = run_report("radial --Z 1 --N 1 --rmax 60 --points 2000 --window 20 50 --trace \"" +
                            csv.string() + "\"",
                        "rad_tr.json");
  std::istringstream is(slurp(csv));
  std::string header;
  REQUIRE(std::getline(is, header));
  REQUIRE(header == "r,u_1,Q_11");
  int rows = 0;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  REQUIRE(rows == rep["grid"]["M"].get<int>());
}

TEST_CASE("command-line flags override the input's options block only when given", "[cli]") {
  std::string in = input_path("he_et8.json");  // file pins tol_energy 1e-11
  json plain = run_report("scf \"" + in + "\"", "he8_plain.json");
  REQUIRE(plain["options"]["tol_energy"].get<double>() == 1e-11);
  json overridden = run_report("scf \"" + in + "\" --tol-energy 1e-9", "he8_override.json");
  REQUIRE(overridden["options"]["tol_energy"].get<double>() == 1e-9);
  REQUIRE(overridden["options"]["tol_commutator"].get<double>() ==
          plain["options"]["tol_commutator"].get<double>());
}
