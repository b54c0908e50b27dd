#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hflab/hfcore.hpp"
#include "hflab/integrals.hpp"
#include "hflab/molbasis.hpp"
#include "hflab/radial.hpp"
#include "hflab/scf.hpp"
#include "hflab/spectra.hpp"
#include "hflab/survey.hpp"
#include "hflab/util.hpp"

namespace hflab {

// Report assembly.  Every command emits one JSON document through
// json_dump_g17 (sorted keys, 17-significant-digit floats, NaN -> null) and
// nothing time- or host-dependent, so identical invocations are identical
// bytes.  Energies are always in the native convention, where the one-body
// operator carries no 1/2 on the Laplacian; --standard-units adds a block of
// doubled values next to them rather than replacing anything.

constexpr int report_schema_version = 1;

inline json vec_json(const Vec& v) {
  json a = json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

inline json mat_cols_json(const Mat& m) {
  json a = json::array();
  for (int j = 0; j < m.cols(); ++j) a.push_back(vec_json(m.col(j)));
  return a;
}

inline json input_echo_json(const ParsedInput& in) {
  json e;
  json atoms = json::array();
  for (const auto& a : in.mol.atoms) {
    json ja;
    ja["Z"] = a.Z;
    ja["position"] = {a.pos[0], a.pos[1], a.pos[2]};
    atoms.push_back(ja);
  }
  e["molecule"] = json::object();
  e["molecule"]["atoms"] = atoms;
  e["molecule"]["n_electrons"] = in.mol.n_electrons;
  e["basis"] = in.basis_name;
  e["basis_hash"] = hex64(basis_hash(in.mol, in.basis));
  e["convention"] = convention_name(in.file_convention);
  e["n_functions"] = in.basis.n_functions();
  return e;
}

inline json options_json(const RunOptions& o) {
  json j;
  j["damping"] = o.damping;
  j["degeneracy_tol"] = o.degeneracy_tol;
  j["guess"] = o.guess;
  j["max_iter"] = o.max_iter;
  j["seed"] = o.seed;
  j["tol_commutator"] = o.tol_commutator;
  j["tol_energy"] = o.tol_energy;
  return j;
}

inline json report_envelope(const std::string& command, const ParsedInput& in) {
  json r;
  r["command"] = command;
  r["schema_version"] = report_schema_version;
  r["units"] = "paper";
  r["input"] = input_echo_json(in);
  r["options"] = options_json(in.options);
  r["seed"] = in.options.seed;
  return r;
}

// --- scf ---------------------------------------------------------------------

inline json scf_results_json(const IntegralTables& t, const ScfResult& r,
                             bool standard_units) {
  json res;
  res["outcome"] = outcome_name(r.outcome);
  res["converged"] = r.outcome == ScfOutcome::converged;
  res["iterations"] = r.iterations;
  res["E"] = r.E;
  res["enuc"] = t.enuc;
  res["eps"] = vec_json(r.eps);
  res["eps_full"] = vec_json(r.eps_full);
  res["residual"] = r.residual;
  res["commutator_norm"] = r.commutator;
  res["degenerate_top_level"] = r.degenerate;
  res["orbitals"] = mat_cols_json(r.C);
  res["cond_S"] = t.cond_S;

  KoopmansReport k = koopmans_split(t, r.C, r.eps, r.E);
  json jk;
  jk["e_frozen"] = k.e_frozen;
  jk["eps_top"] = k.eps_top;
  jk["ionization"] = k.ionization;
  jk["residual"] = k.residual;
  res["koopmans"] = jk;

  double lam_min = gen_sym_eigvals(t.hcore, t.S)(0);
  json jb;
  jb["lambda_min_h"] = lam_min;
  jb["min_eps"] = r.eps.size() ? r.eps.minCoeff() : 0.0;
  jb["satisfied"] = r.eps.size() ? r.eps.minCoeff() >= lam_min - 1e-10 : true;
  res["orbital_energy_bound"] = jb;

  if (standard_units) {
    json su;
    su["E"] = 2.0 * r.E;
    su["enuc"] = 2.0 * t.enuc;
    su["eps"] = vec_json(2.0 * r.eps);
    res["standard_units"] = su;
  }
  return res;
}

inline json scf_report(const ParsedInput& in, const IntegralTables& t, const ScfResult& r,
                       bool standard_units) {
  json rep = report_envelope("scf", in);
  rep["results"] = scf_results_json(t, r, standard_units);
  return rep;
}

// --- survey ------------------------------------------------------------------

inline json survey_report(const ParsedInput& in, const SurveyResult& s, bool standard_units) {
  json rep = report_envelope("survey", in);
  json res;
  res["n_starts"] = s.cfg.n_starts;
  res["epsilon"] = s.cfg.epsilon;
  res["cluster_tol"] = s.cfg.cluster_tol;
  res["n_converged"] = s.n_converged;
  int n_osc = 0, n_max = 0;
  for (const auto& row : s.rows) {
    if (row.outcome == ScfOutcome::oscillation) ++n_osc;
    if (row.outcome == ScfOutcome::max_iter_reached) ++n_max;
  }
  res["n_oscillation"] = n_osc;
  res["n_max_iter"] = n_max;
  res["J_est"] = s.J_est;  // NaN serializes to null alongside the explanatory flag
  res["J_est_is_upper_bound"] = true;

  json clusters = json::array();
  int gamma_census = 0, below_census = 0;
  for (const auto& c : s.clusters) {
    json jc;
    jc["id"] = c.id;
    jc["E"] = c.E;
    jc["count"] = c.count;
    jc["eps"] = vec_json(c.eps);
    jc["eps_min"] = c.eps.minCoeff();
    jc["eps_max"] = c.eps.maxCoeff();
    jc["degenerate"] = c.degenerate;
    jc["in_gamma"] = c.in_gamma;
    jc["below_threshold"] = c.below;
    clusters.push_back(jc);
    if (c.in_gamma) ++gamma_census;
    if (c.below) ++below_census;
  }
  res["clusters"] = clusters;
  res["gamma_census"] = gamma_census;
  res["below_threshold_census"] = below_census;
  res["below_contract_ok"] = s.below_contract_ok;
  res["koopmans_audit_ok"] = s.koopmans_audit_ok;
  json flags = json::array();
  for (const auto& f : s.flags) flags.push_back(f);
  res["flags"] = flags;

  if (standard_units) {
    json su;
    su["J_est"] = 2.0 * s.J_est;
    json ce = json::array();
    for (const auto& c : s.clusters) ce.push_back(2.0 * c.E);
    su["cluster_E"] = ce;
    res["standard_units"] = su;
  }
  rep["results"] = res;
  return rep;
}

// --- hessian -----------------------------------------------------------------

inline json lm_certificate_json(const LmCertificate& c) {
  json j;
  j["epsilon"] = c.epsilon;
  j["half_epsilon_target"] = c.half_epsilon;
  j["n_low"] = c.n_low;
  j["min_eig_L"] = c.min_eig_L;
  j["invertibility_margin"] = c.invertibility_margin;
  j["l_coercive"] = c.l_ok;
  j["reassembly_max_abs"] = c.reassembly_max_abs;
  json rt;
  rt["rank_h2"] = c.rank_h2;
  rt["rank_h2_expected"] = c.rank_h2_expected;
  rt["rank_h2_ok"] = c.rank_h2_ok;
  rt["rank_exchange"] = c.rank_exchange;
  rt["rank_exchange_bound_claimed"] = c.rank_exchange_bound;
  rt["rank_exchange_within_claimed_bound"] = c.rank_exchange_ok;
  rt["rank_m"] = c.rank_m;
  rt["rank_subadditive_ok"] = c.rank_subadditive_ok;
  j["rank_table"] = rt;
  j["m_abs_eigs"] = vec_json(c.m_abs_eigs);
  return j;
}

inline json hessian_report(const ParsedInput& in, const IntegralTables& t, const ScfResult& r,
                           const std::vector<double>& epsilons, bool standard_units) {
  json rep = report_envelope("hessian", in);
  json res;
  res["E"] = r.E;
  res["eps"] = vec_json(r.eps);
  res["residual"] = r.residual;
  double eps_star = default_epsilon_split(r.eps);
  res["epsilon_star"] = eps_star;

  json certs = json::array();
  for (double e : epsilons) {
    HessianForm H = build_hessian(t, r.C, r.eps, e);
    certs.push_back(lm_certificate_json(lm_certificate(H)));
  }
  res["certificates"] = certs;

  HessianForm H = build_hessian(t, r.C, r.eps, eps_star);
  FdCheckReport fd = fd_check_report(t, r.C, r.eps, H, 20, in.options.seed);
  json jfd;
  jfd["max_rel_err"] = fd.max_rel_err;
  jfd["n_directions"] = fd.n_directions;
  jfd["step"] = fd.step;
  res["fd_check"] = jfd;

  RqIdentitySample rq = rq_identity_sample(t, r.C, 20, in.options.seed);
  json jrq;
  jrq["lhs_operator"] = rq.first.lhs_operator;
  jrq["rhs_direct"] = rq.first.rhs_direct;
  jrq["rhs_pair"] = rq.first.rhs_pair;
  jrq["max_route_dev"] = rq.max_route_dev;
  jrq["min_value"] = rq.min_value;
  jrq["n_directions"] = rq.n_directions;
  res["coupling_identity"] = jrq;

  RsPositivity rs = rs_positivity_check(t, r.C);
  json jrs;
  jrs["min_eig_direct_minus_exchange"] = rs.min_eig_jk;
  jrs["min_eig_pair_kernels"] = rs.min_eig_pair;
  jrs["global_min"] = rs.global_min;
  res["positivity"] = jrs;

  if (standard_units) {
    json su;
    su["E"] = 2.0 * r.E;
    su["eps"] = vec_json(2.0 * r.eps);
    res["standard_units"] = su;
  }
  rep["results"] = res;
  return rep;
}

// --- radial ------------------------------------------------------------------

inline json radial_report(const RadialSolution& sol, double window_lo, double window_hi,
                          std::uint64_t seed, bool standard_units) {
  json rep;
  rep["command"] = "radial";
  rep["schema_version"] = report_schema_version;
  rep["units"] = "paper";
  rep["seed"] = seed;
  json grid;
  grid["M"] = sol.grid.M;
  grid["rmin"] = sol.grid.rmin;
  grid["rmax"] = sol.grid.rmax;
  grid["dx"] = sol.grid.dx;
  rep["grid"] = grid;
  json res;
  res["Z"] = sol.Z;
  res["N"] = sol.N;
  res["converged"] = sol.converged;
  res["iterations"] = sol.iterations;
  res["E"] = sol.E;
  res["eps"] = vec_json(sol.eps);

  DecayReport dec = decay_fit(sol, window_lo, window_hi);
  json jd;
  jd["slopes"] = vec_json(dec.slopes);
  jd["threshold"] = dec.threshold;
  jd["window"] = {window_lo, window_hi};
  jd["all_within"] = dec.all_within;
  res["decay"] = jd;

  double etilde = 0.9 * (-sol.eps.array()).minCoeff();
  WeightedNormReport wn = weighted_tail_norm(sol, etilde);
  json jw;
  jw["value"] = wn.value;
  jw["etilde"] = wn.etilde;
  jw["finite"] = wn.finite;
  jw["tail_violations"] = wn.tail_violations;
  res["weighted_norm"] = jw;

  FarfieldReport ff = farfield_q_check(sol);
  json jf;
  jf["qii_max_dev"] = ff.qii_max_dev;
  jf["qii_max_value"] = ff.qii_max_value;
  jf["qii_monotone"] = ff.qii_monotone;
  jf["min_margin"] = ff.min_margin;
  jf["offdiag_rq_max"] = ff.offdiag_rq_max;
  res["farfield"] = jf;

  res["h2_norms"] = vec_json(h2norm_report(sol));
  res["gram_deviation"] = gram_deviation(sol);
  if (sol.N == 1) {
    VirialReport v = virial_report(sol);
    json jv;
    jv["v_expectation"] = v.v_expect;
    jv["t_expectation"] = v.t_expect;
    res["virial"] = jv;
  }

  if (standard_units) {
    json su;
    su["E"] = 2.0 * sol.E;
    su["eps"] = vec_json(2.0 * sol.eps);
    res["standard_units"] = su;
  }
  rep["results"] = res;
  return rep;
}

// --- dump-integrals ------------------------------------------------------------

inline json dump_report(const ParsedInput& in, const IntegralTables& t, const std::string& path,
                        std::size_t bytes) {
  json rep = report_envelope("dump-integrals", in);
  json res;
  res["path"] = path;
  res["bytes"] = bytes;
  res["n"] = t.n;
  res["l_max"] = t.l_max;
  res["s_min"] = t.s_min;
  res["s_max"] = t.s_max;
  res["cond_S"] = t.cond_S;
  res["enuc"] = t.enuc;
  rep["results"] = res;
  return rep;
}

// --- CSV streams ---------------------------------------------------------------

inline std::string trace_csv(const std::vector<ScfTraceRow>& trace, int N) {
  std::string out = "iter,E,E_bivariate,commutator_norm";
  for (int i = 1; i <= N; ++i) out += ",eps_" + std::to_string(i);
  out += "\n";
  for (const auto& row : trace) {
    out += std::to_string(row.iter);
    out += "," + fmt17(row.E);
    out += "," + fmt17(row.E_biv);
    out += "," + fmt17(row.comm);
    for (int i = 0; i < N; ++i) out += "," + fmt17(row.eps(i));
    out += "\n";
  }
  return out;
}

inline std::string survey_csv(const SurveyResult& s) {
  int N = s.N;
  std::string out = "seed,outcome,E";
  for (int i = 1; i <= N; ++i) out += ",eps_" + std::to_string(i);
  out += ",residual,cluster_id\n";
  for (const auto& row : s.rows) {
    out += std::to_string(row.stream_seed);
    out += "," + outcome_name(row.outcome);
    out += "," + fmt17(row.E);
    for (int i = 0; i < N; ++i) out += "," + fmt17(row.eps(i));
    out += "," + fmt17(row.residual);
    out += "," + std::to_string(row.cluster);
    out += "\n";
  }
  return out;
}

// Radial profile: u_i(r) = w_i sqrt(r) and the cumulative pair charges
// Q_ii(r), one row per grid node.
inline std::string radial_tail_csv(const RadialSolution& sol) {
  const RadialGrid& g = sol.grid;
  const int N = sol.N;
  std::string out = "r";
  for (int i = 1; i <= N; ++i) out += ",u_" + std::to_string(i);
  for (int i = 1; i <= N; ++i) out += ",Q_" + std::to_string(i) + std::to_string(i);
  out += "\n";
  Mat U(g.M, N);
  for (int j = 0; j < N; ++j) U.col(j) = sol.W.col(j).cwiseProduct(g.r.cwiseSqrt());
  Mat Q(g.M, N);
  for (int j = 0; j < N; ++j) {
    double acc = 0.0;
    for (int k = 0; k < g.M; ++k) {
      acc += U(k, j) * U(k, j) * g.r(k) * g.dx;
      Q(k, j) = acc;
    }
  }
  for (int k = 0; k < g.M; ++k) {
    out += fmt17(g.r(k));
    for (int j = 0; j < N; ++j) out += "," + fmt17(U(k, j));
    for (int j = 0; j < N; ++j) out += "," + fmt17(Q(k, j));
    out += "\n";
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace hflab
