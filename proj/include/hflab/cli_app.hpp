#pragma once

// Command-line front end.  Five subcommands share one report convention:
// a JSON document with sorted keys and 17-significant-digit floats, written
// to --out (or stdout), plus an optional CSV side stream via --trace.
// Identical invocations produce byte-identical reports: no timestamps, no
// environment echo, all randomness drawn from the explicit seed.
//
// Exit codes: 0 success / converged, 1 usage or input error (single-line
// diagnostic on stderr), 2 oscillation detected, 3 iteration limit.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hflab/integrals.hpp"
#include "hflab/molbasis.hpp"
#include "hflab/radial.hpp"
#include "hflab/report.hpp"
#include "hflab/scf.hpp"
#include "hflab/spectra.hpp"
#include "hflab/survey.hpp"
#include "hflab/util.hpp"

namespace hflab {
namespace cli {

inline int outcome_exit_code(ScfOutcome o) {
  switch (o) {
    case ScfOutcome::converged: return 0;
    case ScfOutcome::oscillation: return 2;
    default: return 3;
  }
}

inline void emit_text(const std::string& content, const std::string& out_path) {
  if (out_path.empty()) {
    std::fputs(content.c_str(), stdout);
  } else {
    write_text_file(out_path, content);
  }
}

inline void emit_report(const json& rep, const std::string& out_path) {
  emit_text(json_dump_g17(rep), out_path);
}

inline ParsedInput load_input(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open input file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_input(ss.str());
}

// Solver flags shared by scf / survey / hessian / dump-integrals.  A flag
// overrides the input file's options block only when actually given.
struct RunFlags {
  CLI::Option* tol_e = nullptr;
  CLI::Option* tol_c = nullptr;
  CLI::Option* max_iter = nullptr;
  CLI::Option* damping = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* guess = nullptr;
  double tol_e_v = 1e-10;
  double tol_c_v = 1e-8;
  int max_iter_v = 500;
  double damping_v = 0.0;
  std::uint64_t seed_v = 0;
  std::string guess_v = "core";

  void attach(CLI::App* cmd) {
    tol_e = cmd->add_option("--tol-energy", tol_e_v, "energy-change convergence threshold");
    tol_c = cmd->add_option("--tol-commutator", tol_c_v,
                            "commutator / stationarity residual threshold");
    max_iter = cmd->add_option("--max-iter", max_iter_v, "iteration cap");
    damping = cmd->add_option("--damping", damping_v, "density mixing weight kept from the old iterate")
                  ->check(CLI::Range(0.0, 0.999));
    seed = cmd->add_option("--seed", seed_v, "RNG seed for random guesses and probe directions");
    guess = cmd->add_option("--guess", guess_v, "initial guess: core or random")
                ->check(CLI::IsMember({"core", "random"}));
  }

  void apply(RunOptions& o) const {
    if (tol_e->count()) o.tol_energy = tol_e_v;
    if (tol_c->count()) o.tol_commutator = tol_c_v;
    if (max_iter->count()) o.max_iter = max_iter_v;
    if (damping->count()) o.damping = damping_v;
    if (seed->count()) o.seed = seed_v;
    if (guess->count()) o.guess = guess_v;
  }
};

inline int cli_main(int argc, char** argv) {
  CLI::App app{"Hartree-Fock laboratory: finite-basis solver, minimum survey, "
               "stability certificates, and a radial benchmark"};
  app.require_subcommand(1);

  // --- scf -------------------------------------------------------------
  auto* scf_cmd = app.add_subcommand("scf", "solve the self-consistent field equations");
  std::string scf_input, scf_out, scf_trace;
  bool scf_std = false;
  RunFlags scf_flags;
  scf_cmd->add_option("input", scf_input, "molecule/basis JSON document")->required();
  scf_cmd->add_option("--out", scf_out, "report path (default: stdout)");
  scf_cmd->add_option("--trace", scf_trace, "write per-iteration CSV here");
  scf_cmd->add_flag("--standard-units", scf_std, "add a block with doubled energies");
  scf_flags.attach(scf_cmd);

  // --- survey ----------------------------------------------------------
  auto* sur_cmd = app.add_subcommand("survey", "multistart census of converged minima");
  std::string sur_input, sur_out, sur_trace;
  bool sur_std = false;
  int sur_starts = 20;
  double sur_epsilon = 0.01, sur_cluster_tol = 1e-6;
  RunFlags sur_flags;
  sur_cmd->add_option("input", sur_input, "molecule/basis JSON document")->required();
  sur_cmd->add_option("--out", sur_out, "report path (default: stdout)");
  sur_cmd->add_option("--trace", sur_trace, "write the per-start CSV here");
  sur_cmd->add_flag("--standard-units", sur_std, "add a block with doubled energies");
  sur_cmd->add_option("--starts", sur_starts, "number of random starts")->check(CLI::PositiveNumber);
  sur_cmd->add_option("--epsilon", sur_epsilon, "census margin for the level sets");
  sur_cmd->add_option("--cluster-tol", sur_cluster_tol, "energy gap that opens a new cluster");
  sur_flags.attach(sur_cmd);

  // --- hessian ---------------------------------------------------------
  auto* hes_cmd = app.add_subcommand(
      "hessian", "second-order stability certificate at the converged point");
  std::string hes_input, hes_out;
  bool hes_std = false;
  double hes_split = 0.0;
  RunFlags hes_flags;
  hes_cmd->add_option("input", hes_input, "molecule/basis JSON document")->required();
  hes_cmd->add_option("--out", hes_out, "report path (default: stdout)");
  hes_cmd->add_flag("--standard-units", hes_std, "add a block with doubled energies");
  auto* hes_split_opt =
      hes_cmd->add_option("--epsilon-split", hes_split,
                          "spectral split point (default: sweep 0.5x, 1x, 1.5x of -max eps)")
          ->check(CLI::PositiveNumber);
  hes_flags.attach(hes_cmd);

  // --- radial ----------------------------------------------------------
  auto* rad_cmd = app.add_subcommand(
      "radial", "spherically averaged benchmark on a logarithmic grid");
  double rad_Z = 1.0, rad_rmin = 1e-5, rad_rmax = 300.0;
  int rad_N = 1, rad_points = 3200;
  std::vector<double> rad_window;
  std::string rad_out, rad_trace;
  bool rad_std = false;
  std::uint64_t rad_seed = 0;
  rad_cmd->add_option("--Z", rad_Z, "nuclear charge")->required()->check(CLI::PositiveNumber);
  rad_cmd->add_option("--N", rad_N, "number of orbitals")->check(CLI::PositiveNumber);
  rad_cmd->add_option("--rmin", rad_rmin, "innermost grid radius")->check(CLI::PositiveNumber);
  rad_cmd->add_option("--rmax", rad_rmax, "outermost grid radius");
  rad_cmd->add_option("--points", rad_points, "number of grid nodes");
  auto* rad_window_opt = rad_cmd->add_option("--window", rad_window,
                                             "decay-fit radius window lo hi")
                             ->expected(2);
  rad_cmd->add_option("--out", rad_out, "report path (default: stdout)");
  rad_cmd->add_option("--trace", rad_trace, "write the tail profile CSV here");
  rad_cmd->add_flag("--standard-units", rad_std, "add a block with doubled energies");
  rad_cmd->add_option("--seed", rad_seed, "echoed into the report envelope");

  // --- dump-integrals ----------------------------------------------------
  auto* dmp_cmd = app.add_subcommand("dump-integrals",
                                     "write the one- and two-body tables as binary");
  std::string dmp_input, dmp_out;
  RunFlags dmp_flags;
  dmp_cmd->add_option("input", dmp_input, "molecule/basis JSON document")->required();
  dmp_cmd->add_option("--out", dmp_out, "binary dump path")->required();
  dmp_flags.attach(dmp_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*scf_cmd) {
      ParsedInput in = load_input(scf_input);
      scf_flags.apply(in.options);
      IntegralTables t = build_tables(in.mol, in.basis);
      ScfResult r = run_scf(t, in.mol.n_electrons, in.options);
      emit_report(scf_report(in, t, r, scf_std), scf_out);
      if (!scf_trace.empty()) write_text_file(scf_trace, trace_csv(r.trace, in.mol.n_electrons));
      return outcome_exit_code(r.outcome);
    }

    if (*sur_cmd) {
      ParsedInput in = load_input(sur_input);
      sur_flags.apply(in.options);
      SurveyConfig cfg;
      cfg.n_starts = sur_starts;
      cfg.epsilon = sur_epsilon;
      cfg.cluster_tol = sur_cluster_tol;
      cfg.seed = in.options.seed;
      cfg.run = in.options;
      IntegralTables t = build_tables(in.mol, in.basis);
      SurveyResult s = run_survey(t, in.mol.n_electrons, cfg);
      emit_report(survey_report(in, s, sur_std), sur_out);
      if (!sur_trace.empty()) write_text_file(sur_trace, survey_csv(s));
      return 0;
    }

    if (*hes_cmd) {
      ParsedInput in = load_input(hes_input);
      hes_flags.apply(in.options);
      IntegralTables t = build_tables(in.mol, in.basis);
      ScfResult r = run_scf(t, in.mol.n_electrons, in.options);
      if (r.outcome != ScfOutcome::converged) {
        std::fprintf(stderr, "hessian: SCF did not converge (%s after %d iterations)\n",
                     outcome_name(r.outcome).c_str(), r.iterations);
        return outcome_exit_code(r.outcome);
      }
      std::vector<double> splits;
      if (hes_split_opt->count()) {
        splits.push_back(hes_split);
      } else {
        double star = default_epsilon_split(r.eps);
        splits = {0.5 * star, star, 1.5 * star};
      }
      emit_report(hessian_report(in, t, r, splits, hes_std), hes_out);
      return 0;
    }

    if (*rad_cmd) {
      RadialGrid grid = make_radial_grid(rad_rmin, rad_rmax, rad_points);
      RadialSolution sol = solve_radial(rad_Z, rad_N, grid);
      double wlo = rad_window_opt->count() ? rad_window[0] : 0.6 * rad_rmax;
      double whi = rad_window_opt->count() ? rad_window[1] : 0.9 * rad_rmax;
      if (!(wlo > 0.0 && whi > wlo))
        throw ParseError("--window expects 0 < lo < hi");
      if (!sol.converged) {
        std::fprintf(stderr, "radial: SCF did not converge within %d iterations\n",
                     sol.iterations);
        return 2;
      }
      emit_report(radial_report(sol, wlo, whi, rad_seed, rad_std), rad_out);
      if (!rad_trace.empty()) write_text_file(rad_trace, radial_tail_csv(sol));
      return 0;
    }

    if (*dmp_cmd) {
      ParsedInput in = load_input(dmp_input);
      dmp_flags.apply(in.options);
      IntegralTables t = build_tables(in.mol, in.basis);
      std::ofstream os(dmp_out, std::ios::binary);
      if (!os) throw ParseError("cannot open output file: " + dmp_out);
      dump_tables(t, os);
      os.flush();
      if (!os) throw ParseError("write failed: " + dmp_out);
      auto bytes = static_cast<std::uint64_t>(os.tellp());
      os.close();
      emit_report(dump_report(in, t, dmp_out, bytes), "");
      return 0;
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const RadialError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

}  // namespace cli
}  // namespace hflab
