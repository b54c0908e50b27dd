#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hflab/hfcore.hpp"
#include "hflab/integrals.hpp"
#include "hflab/linalg.hpp"

namespace hflab {

// ---------------------------------------------------------------------------
// Second-order structure at a critical point (C, eps).  Directions are
// orbital-major: x = [w_1; ...; w_N; de] with each w_i of length n.
//
// The derivative of the gradient map splits as F' = [[L + M, -S c_i],
// [-2 (S c_i)^T, 0]], where L collects the part of the one-body operator
// above the spectral cut together with the direct-Coulomb couplings and M
// the rest.  L is the block that carries the coercivity estimate: its
// smallest eigenvalue against blkdiag(S,...,S) stays above epsilon/2 when
// the cut parameter epsilon is at most min_i(-eps_i).
// ---------------------------------------------------------------------------

struct SpectralSplit {
  Mat H2;           // n x n: S V_low diag(lambda_low) V_low^T S
  int n_low = 0;    // number of one-body levels at or below the cut
  double cut = 0.0; // -epsilon/2
};

// Splits h = h_low + h_high via its generalized spectrum against S, keeping
// in H2 the rank-n_low piece from levels lambda <= -epsilon/2.
inline SpectralSplit spectral_split(const Mat& h, const Mat& S, double epsilon) {
  if (!(epsilon > 0.0)) throw std::runtime_error("spectral_split: epsilon must be positive");
  Vec lam;
  Mat V;
  gen_sym_eig(h, S, lam, V);  // V^T S V = I, h = S V diag(lam) V^T S
  SpectralSplit sp;
  sp.cut = -0.5 * epsilon;
  int n = static_cast<int>(h.rows());
  sp.H2 = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    if (lam(k) <= sp.cut) {
      Vec u = S * V.col(k);
      sp.H2 += lam(k) * u * u.transpose();
      ++sp.n_low;
    }
  }
  return sp;
}

// Default cut parameter: the distance from the occupied multipliers to zero.
inline double default_epsilon_split(const Vec& eps) { return -eps.maxCoeff(); }

struct HessianForm {
  int n = 0, N = 0;
  double epsilon = 0.0;
  int n_low = 0;
  Mat H2;      // n x n low-spectrum one-body piece used in the split
  Mat L;       // nN x nN: one-body high part + direct couplings
  Mat M;       // nN x nN: one-body low part + exchange couplings
  Mat Fprime;  // (nN + N)^2 derivative of the gradient map
  Mat Sblk;    // I_N kron S
};

inline HessianForm build_hessian(const IntegralTables& t, const Mat& C, const Vec& eps,
                                 double epsilon) {
  const int n = t.n;
  const int N = static_cast<int>(C.cols());
  HessianForm H;
  H.n = n;
  H.N = N;
  H.epsilon = epsilon;

  std::vector<std::vector<Mat>> Jg(N, std::vector<Mat>(N)), Kg(N, std::vector<Mat>(N));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      Jg[i][j] = build_Jgen(t.eri, C.col(i), C.col(j));
      Kg[i][j] = build_Kgen(t.eri, C.col(i), C.col(j));
    }

  SpectralSplit sp = spectral_split(t.hcore, t.S, epsilon);
  H.n_low = sp.n_low;
  H.H2 = sp.H2;

  H.L = Mat::Zero(n * N, n * N);
  H.M = Mat::Zero(n * N, n * N);
  for (int i = 0; i < N; ++i) {
    Mat Rii = Mat::Zero(n, n), Kii = Mat::Zero(n, n);
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      Rii += Jg[j][j];
      Kii += Kg[j][j];
    }
    H.L.block(i * n, i * n, n, n) = t.hcore - eps(i) * t.S - sp.H2 + Rii;
    H.M.block(i * n, i * n, n, n) = sp.H2 - Kii;
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      H.L.block(i * n, j * n, n, n) = -Jg[i][j];
      H.M.block(i * n, j * n, n, n) = 2.0 * Kg[i][j] - Kg[j][i];
    }
  }

  // F' assembled from the raw derivative formula, independent of the split;
  // its function-function corner must reproduce L + M.
  H.Fprime = Mat::Zero(n * N + N, n * N + N);
  for (int i = 0; i < N; ++i) {
    Mat diag = t.hcore - eps(i) * t.S;
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      diag += Jg[j][j] - Kg[j][j];
    }
    H.Fprime.block(i * n, i * n, n, n) = diag;
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      H.Fprime.block(i * n, j * n, n, n) = -Jg[i][j] + 2.0 * Kg[i][j] - Kg[j][i];
    }
    Vec sc = t.S * C.col(i);
    H.Fprime.block(i * n, n * N + i, n, 1) = -sc;
    H.Fprime.block(n * N + i, i * n, 1, n) = -2.0 * sc.transpose();
  }

  H.Sblk = Mat::Zero(n * N, n * N);
  for (int i = 0; i < N; ++i) H.Sblk.block(i * n, i * n, n, n) = t.S;
  return H;
}

inline double min_eig_metric(const Mat& A, const Mat& B) { return gen_sym_eigvals(A, B)(0); }

// Numerical rank: singular values above rel_tol times the largest.
inline int svd_rank(const Mat& A, double rel_tol = 1e-10) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  int r = 0;
  for (int k = 0; k < s.size(); ++k)
    if (s(k) > rel_tol * s(0)) ++r;
  return r;
}

// Finite-dimensional shadow of "L invertible, M compact": the coercivity
// margin of L in the blockdiag(S) metric against the epsilon/2 target, and
// explicit rank accounting for M.  M's low-spectrum part has exact rank
// N * n_low by construction; the exchange couplings are rank-bounded by
// 3 N^2 (2N^2 from the pair-coupling family plus N^2 from its transpose
// partner); M as a whole can never exceed the sum.
struct LmCertificate {
  double epsilon = 0.0;
  double half_epsilon = 0.0;        // the coercivity target
  double min_eig_L = 0.0;           // against blockdiag(S)
  double invertibility_margin = 0;  // min(min_eig_L, 1): multiplier sector is identity
  bool l_ok = false;                // min_eig_L >= epsilon/2 - 1e-8
  int n_low = 0;
  int rank_h2 = 0;                  // measured on the stacked low-spectrum part
  int rank_h2_expected = 0;         // N * n_low, exact contract
  bool rank_h2_ok = false;
  int rank_exchange = 0;            // measured on M minus its low-spectrum part
  int rank_exchange_bound = 0;      // 3 N^2
  bool rank_exchange_ok = false;
  int rank_m = 0;
  bool rank_subadditive_ok = false;  // rank M <= rank H2-part + rank exchange-part
  double reassembly_max_abs = 0.0;   // |Fprime_phiphi - (L + M)|_inf
  Vec m_abs_eigs;                    // |spectrum of M|, descending: decay profile
};

inline LmCertificate lm_certificate(const HessianForm& H) {
  const int n = H.n, N = H.N;
  LmCertificate c;
  c.epsilon = H.epsilon;
  c.half_epsilon = 0.5 * H.epsilon;
  c.min_eig_L = min_eig_metric(H.L, H.Sblk);
  c.invertibility_margin = std::min(c.min_eig_L, 1.0);
  c.l_ok = c.min_eig_L >= c.half_epsilon - 1e-8;
  c.n_low = H.n_low;

  Mat h2blk = Mat::Zero(n * N, n * N);
  for (int i = 0; i < N; ++i) h2blk.block(i * n, i * n, n, n) = H.H2;
  c.rank_h2 = svd_rank(h2blk);
  c.rank_h2_expected = N * H.n_low;
  c.rank_h2_ok = c.rank_h2 == c.rank_h2_expected;

  c.rank_exchange = svd_rank(H.M - h2blk);
  c.rank_exchange_bound = 3 * N * N;
  c.rank_exchange_ok = c.rank_exchange <= c.rank_exchange_bound;

  c.rank_m = svd_rank(H.M);
  c.rank_subadditive_ok = c.rank_m <= c.rank_h2 + c.rank_exchange;

  c.reassembly_max_abs =
      (H.Fprime.topLeftCorner(n * N, n * N) - (H.L + H.M)).cwiseAbs().maxCoeff();

  Vec ev = sym_eigvals(H.M);
  c.m_abs_eigs = ev.cwiseAbs();
  std::sort(c.m_abs_eigs.data(), c.m_abs_eigs.data() + c.m_abs_eigs.size(),
            std::greater<double>());
  return c;
}

// --- flattened coordinates and finite-difference probes ----------------------

inline Vec flatten(const Tangent& v) {
  int n = static_cast<int>(v.W.rows()), N = static_cast<int>(v.W.cols());
  Vec x(n * N + N);
  for (int i = 0; i < N; ++i) x.segment(i * n, n) = v.W.col(i);
  x.tail(N) = v.de;
  return x;
}

inline Tangent unflatten(const Vec& x, int n, int N) {
  Tangent v;
  v.W.resize(n, N);
  for (int i = 0; i < N; ++i) v.W.col(i) = x.segment(i * n, n);
  v.de = x.tail(N);
  return v;
}

// --- two-electron positivity and the pair-coupling identity ------------------

// Minimum eigenvalue over the direct-minus-exchange family: the full J - K
// for the density of C, and each per-orbital Coulomb-minus-exchange kernel
// Q_ii - S_ii.  Both are Cauchy-Schwarz-nonnegative for any orbital set, not
// just critical points; the return value certifies that on this basis.
struct RsPositivity {
  double min_eig_jk = 0.0;    // min eig of J - K
  double min_eig_pair = 0.0;  // min over i of min eig of Q_ii - S_ii
  double global_min = 0.0;
};

inline RsPositivity rs_positivity_check(const IntegralTables& t, const Mat& C) {
  const int N = static_cast<int>(C.cols());
  Mat D = density(C);
  RsPositivity out;
  out.min_eig_jk = sym_eigvals(build_J(t.eri, D) - build_K(t.eri, D))(0);
  out.min_eig_pair = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    Mat Di = C.col(i) * C.col(i).transpose();
    double mi = sym_eigvals(build_J(t.eri, Di) - build_K(t.eri, Di))(0);
    out.min_eig_pair = std::min(out.min_eig_pair, mi);
  }
  out.global_min = std::min(out.min_eig_jk, out.min_eig_pair);
  return out;
}

// Quadratic form of one pair kernel along w, by two independent routes:
// operator contraction w^T (Q_ii - S_ii) w and the raw integral
// (ww|phi phi) - (w phi|w phi).
inline std::pair<double, double> rs_quadratic_form(const IntegralTables& t, const Vec& c,
                                                   const Vec& w) {
  Mat Q = build_Jgen(t.eri, c, c);
  Mat K = build_Kgen(t.eri, c, c);
  double op = w.dot((Q - K) * w);
  const int n = t.n;
  double ww_pp = 0.0, wp_wp = 0.0;
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu)
      for (int la = 0; la < n; ++la)
        for (int sg = 0; sg < n; ++sg) {
          double g = t.eri(mu, nu, la, sg);
          ww_pp += g * w(mu) * w(nu) * c(la) * c(sg);
          wp_wp += g * w(mu) * c(nu) * w(la) * c(sg);
        }
  return {op, ww_pp - wp_wp};
}

// The coupling identity behind the Hessian's positive part: for a direction
// set W, the direct-Coulomb quadratic form assembled from operator blocks
// must match the same quantity contracted straight out of the two-electron
// tensor, and its antisymmetrized-pair form.  All three are returned; the
// value is nonnegative for every W.
struct RqIdentity {
  double lhs_operator = 0.0;  // sum_i w_i . (sum_{j!=i} J^(jj) w_i - J^(ij) w_j)
  double rhs_direct = 0.0;    // raw 4-index double sum
  double rhs_pair = 0.0;      // antisymmetrized pair route via generalized J
};

inline RqIdentity rq_identity_check(const IntegralTables& t, const Mat& C, const Mat& W) {
  const int n = t.n;
  const int N = static_cast<int>(C.cols());
  RqIdentity out;

  std::vector<std::vector<Mat>> Jg(N, std::vector<Mat>(N));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) Jg[i][j] = build_Jgen(t.eri, C.col(i), C.col(j));

  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      out.lhs_operator += W.col(i).dot(Jg[j][j] * W.col(i)) - W.col(i).dot(Jg[i][j] * W.col(j));
    }

  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      double direct = 0.0, cross = 0.0;
      for (int mu = 0; mu < n; ++mu)
        for (int nu = 0; nu < n; ++nu)
          for (int la = 0; la < n; ++la)
            for (int sg = 0; sg < n; ++sg) {
              double g = t.eri(mu, nu, la, sg);
              direct += g * W(mu, i) * W(nu, i) * C(la, j) * C(sg, j);
              cross += g * W(mu, i) * W(nu, j) * C(la, j) * C(sg, i);
            }
      out.rhs_direct += direct - cross;
    }

  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      double a = W.col(i).dot(Jg[j][j] * W.col(i));
      double b = W.col(j).dot(Jg[i][i] * W.col(j));
      double c = W.col(i).dot(Jg[j][i] * W.col(j));
      out.rhs_pair += 0.5 * (a + b - 2.0 * c);
    }
  return out;
}

// Gradient of the Lagrangian at arbitrary (Phi, e) — no orthonormality
// assumed; the density sums the given columns as they are.
inline Vec gradient_flat(const IntegralTables& t, const Mat& Phi, const Vec& e) {
  Mat F = fock(t.hcore, t.eri, density(Phi));
  return flatten(lagrangian_gradient(F, t.S, Phi, e));
}

// Central difference of the gradient map along direction x.
inline Vec fd_gradient_directional(const IntegralTables& t, const Mat& C, const Vec& eps,
                                   const Vec& x, double step) {
  int n = t.n, N = static_cast<int>(C.cols());
  Tangent d = unflatten(x, n, N);
  Vec gp = gradient_flat(t, C + step * d.W, eps + step * d.de);
  Vec gm = gradient_flat(t, C - step * d.W, eps - step * d.de);
  return (gp - gm) / (2.0 * step);
}

// Richardson-extrapolated variant: D(h) and D(h/2) combined to fourth order.
inline Vec fd_gradient_richardson(const IntegralTables& t, const Mat& C, const Vec& eps,
                                  const Vec& x, double step) {
  Vec d1 = fd_gradient_directional(t, C, eps, x, step);
  Vec d2 = fd_gradient_directional(t, C, eps, x, 0.5 * step);
  return (4.0 * d2 - d1) / 3.0;
}

// Sampled agreement between the assembled derivative and central differences
// over seeded random directions.  Directions that miss the 1e-6 relative
// target at step 1e-5 are retried with Richardson extrapolation at 1e-4
// before the worst case is recorded.
struct FdCheckReport {
  double max_rel_err = 0.0;
  int n_directions = 0;
  double step = 1e-5;
};

inline FdCheckReport fd_check_report(const IntegralTables& t, const Mat& C, const Vec& eps,
                                     const HessianForm& H, int n_dirs, std::uint64_t seed) {
  const int n = t.n, N = static_cast<int>(C.cols());
  FdCheckReport rep;
  rep.n_directions = n_dirs;
  for (int k = 0; k < n_dirs; ++k) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    Vec x(n * N + N);
    for (int q = 0; q < x.size(); ++q) x(q) = rng.next_normal();
    x /= x.norm();
    Vec ref = H.Fprime * x;
    double scale = std::max(1.0, ref.norm());
    double rel = (fd_gradient_directional(t, C, eps, x, rep.step) - ref).norm() / scale;
    if (rel > 1e-6) {
      double rel2 = (fd_gradient_richardson(t, C, eps, x, 1e-4) - ref).norm() / scale;
      rel = std::min(rel, rel2);
    }
    rep.max_rel_err = std::max(rep.max_rel_err, rel);
  }
  return rep;
}

// Sampled coupling identity: routes evaluated over seeded random direction
// sets; the first sample is kept verbatim for the report, aggregates track
// the worst route disagreement and the smallest value seen.
struct RqIdentitySample {
  RqIdentity first;
  double max_route_dev = 0.0;
  double min_value = 0.0;
  int n_directions = 0;
};

inline RqIdentitySample rq_identity_sample(const IntegralTables& t, const Mat& C, int n_dirs,
                                           std::uint64_t seed) {
  const int n = t.n, N = static_cast<int>(C.cols());
  RqIdentitySample rep;
  rep.n_directions = n_dirs;
  rep.min_value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_dirs; ++k) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    Mat W(n, N);
    for (int j = 0; j < N; ++j)
      for (int q = 0; q < n; ++q) W(q, j) = rng.next_normal();
    RqIdentity id = rq_identity_check(t, C, W);
    if (k == 0) rep.first = id;
    rep.max_route_dev = std::max({rep.max_route_dev, std::abs(id.lhs_operator - id.rhs_direct),
                                  std::abs(id.lhs_operator - id.rhs_pair)});
    rep.min_value = std::min(rep.min_value, id.lhs_operator);
  }
  return rep;
}

}  // namespace hflab
