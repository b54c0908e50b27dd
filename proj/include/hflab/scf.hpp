#pragma once

#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "hflab/hfcore.hpp"
#include "hflab/integrals.hpp"
#include "hflab/linalg.hpp"
#include "hflab/molbasis.hpp"

namespace hflab {

enum class ScfOutcome { converged, oscillation, max_iter_reached };

inline std::string outcome_name(ScfOutcome o) {
  switch (o) {
    case ScfOutcome::converged: return "converged";
    case ScfOutcome::oscillation: return "oscillation";
    default: return "max_iter";
  }
}

struct ScfTraceRow {
  int iter = 0;
  double E = 0.0;      // 1/2 tr(D(h+F)) at the current iterate
  double E_biv = 0.0;  // tr(D h) + tr(D_new F): two-slot energy of (current, next)
  double comm = 0.0;   // |FDS - SDF|_F
  Vec eps;             // lowest N values of this step's eigensolve
};

struct ScfResult {
  ScfOutcome outcome = ScfOutcome::max_iter_reached;
  double E = 0.0;         // energy of the pure density of the final candidate
  Mat C;                  // n x N occupied columns (sign-canonical)
  Vec eps;                // N multipliers from the final eigensolve
  Vec eps_full;           // all n values
  Mat C_full;             // all n columns
  double residual = 0.0;  // max_i |(F_fresh - eps_i S) c_i|
  double commutator = 0.0;
  int iterations = 0;
  bool degenerate = false;
  std::vector<ScfTraceRow> trace;
};

// Canonical sign: the largest-magnitude entry of each column is positive.
inline void canonicalize_columns(Mat& C) {
  for (int j = 0; j < C.cols(); ++j) {
    int imax = 0;
    double best = 0.0;
    for (int i = 0; i < C.rows(); ++i)
      if (std::abs(C(i, j)) > best) {
        best = std::abs(C(i, j));
        imax = i;
      }
    if (C(imax, j) < 0.0) C.col(j) = -C.col(j);
  }
}

// Fixed-point iteration on the density with linear mixing.  Convergence
// requires the energy and commutator tests to pass *and* a certification
// step: the Fock matrix is rebuilt from the undamped candidate density and
// the stationarity residual measured against it, so a converged result
// always satisfies the critical-point equations to tol_commutator regardless
// of mixing history.
inline ScfResult run_scf(const IntegralTables& t, int N, const RunOptions& opt,
                         const Mat* C_init = nullptr) {
  const int n = t.n;
  if (N < 1 || N > n) throw std::runtime_error("run_scf: orbital count out of range");

  InvSqrtResult X = sym_inv_sqrt(t.S);
  if (!(X.cond() < 1e12))
    throw std::runtime_error("overlap matrix ill-conditioned (cond " + std::to_string(X.cond()) +
                             "); basis is numerically linearly dependent");

  auto solve_fock = [&](const Mat& F, Vec& evals, Mat& evecs) {
    Mat Ft = X.X * F * X.X;
    Vec d;
    Mat U;
    sym_eig(Ft, d, U);
    evals = d;
    evecs = X.X * U;
    canonicalize_columns(evecs);
  };

  // starting density
  Mat C0;
  if (C_init) {
    C0 = *C_init;
  } else if (opt.guess == "random") {
    Rng rng(opt.seed);
    C0 = random_s_orthonormal(rng, t.S, N);
  } else {
    Vec ev;
    Mat evec;
    solve_fock(t.hcore, ev, evec);
    C0 = evec.leftCols(N);
  }
  Mat D = density(C0);

  ScfResult res;
  double E_prev = std::numeric_limits<double>::quiet_NaN();
  std::deque<Mat> hist;  // mixed-density history for oscillation detection
  hist.push_back(D);
  int osc_streak = 0;

  Vec eps_full;
  Mat C_full;
  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    Mat F = fock(t.hcore, t.eri, D);
    double E_cur = hf_energy(D, t.hcore, F);
    double comm = (F * D * t.S - t.S * D * F).norm();

    solve_fock(F, eps_full, C_full);
    Mat C_new = C_full.leftCols(N);
    Vec eps = eps_full.head(N);
    Mat D_new = density(C_new);

    ScfTraceRow row;
    row.iter = iter;
    row.E = E_cur;
    row.E_biv = bivariate_energy(D, D_new, t.hcore, F);
    row.comm = comm;
    row.eps = eps;
    res.trace.push_back(row);

    res.iterations = iter;
    res.commutator = comm;
    res.C = C_new;
    res.eps = eps;
    res.eps_full = eps_full;
    res.C_full = C_full;
    res.degenerate = (N < n) && (eps_full(N) - eps_full(N - 1) < opt.degeneracy_tol);

    bool criteria = std::isfinite(E_prev) && std::abs(E_cur - E_prev) <= opt.tol_energy &&
                    comm <= opt.tol_commutator;
    if (criteria) {
      Mat Fn = fock(t.hcore, t.eri, D_new);
      double r = orbital_residual(Fn, t.S, C_new, eps);
      if (r <= opt.tol_commutator) {
        res.outcome = ScfOutcome::converged;
        res.residual = r;
        res.E = hf_energy(D_new, t.hcore, Fn);
        return res;
      }
    }
    E_prev = E_cur;

    Mat D_next = (1.0 - opt.damping) * D_new + opt.damping * D;

    // period-2 cycling on the mixed iterates: close to two steps back while
    // still moving relative to one step back, ten times in a row
    hist.push_back(D_next);
    if (hist.size() > 3) hist.pop_front();
    if (hist.size() == 3) {
      double d2 = (hist[2] - hist[0]).norm();
      double d1 = (hist[2] - hist[1]).norm();
      osc_streak = (d2 <= 1e-8 && d1 > 1e-8) ? osc_streak + 1 : 0;
      if (osc_streak >= 10) {
        res.outcome = ScfOutcome::oscillation;
        Mat Fn = fock(t.hcore, t.eri, density(res.C));
        res.residual = orbital_residual(Fn, t.S, res.C, res.eps);
        res.E = hf_energy(density(res.C), t.hcore, Fn);
        return res;
      }
    }
    D = D_next;
  }

  res.outcome = ScfOutcome::max_iter_reached;
  Mat Fn = fock(t.hcore, t.eri, density(res.C));
  res.residual = orbital_residual(Fn, t.S, res.C, res.eps);
  res.E = hf_energy(density(res.C), t.hcore, Fn);
  return res;
}

}  // namespace hflab
