#pragma once

#include <cmath>
#include <vector>

#include "hflab/integrals.hpp"
#include "hflab/linalg.hpp"
#include "hflab/util.hpp"

namespace hflab {

// Energy and operator conventions: h = -Delta + V (no 1/2), the functional is
//   E(Phi) = sum_i <phi_i, h phi_i> + sum_{i<j} [(ii|jj) - (ij|ji)],
// equivalently E = tr(D h) + 1/2 tr(D (J - K)) with D = C C^T over real
// orthonormal occupied orbitals.  No nuclear-repulsion term; it is reported
// separately for reference only.

inline Mat density(const Mat& C) { return C * C.transpose(); }

inline Mat build_J(const EriTensor& eri, const Mat& D) {
  int n = eri.n;
  Mat J = Mat::Zero(n, n);
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu <= mu; ++nu) {
      double acc = 0.0;
      for (int la = 0; la < n; ++la)
        for (int si = 0; si < n; ++si) acc += D(la, si) * eri(mu, nu, la, si);
      J(mu, nu) = J(nu, mu) = acc;
    }
  return J;
}

inline Mat build_K(const EriTensor& eri, const Mat& D) {
  int n = eri.n;
  Mat K = Mat::Zero(n, n);
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu <= mu; ++nu) {
      double acc = 0.0;
      for (int la = 0; la < n; ++la)
        for (int si = 0; si < n; ++si) acc += D(la, si) * eri(mu, la, si, nu);
      K(mu, nu) = K(nu, mu) = acc;
    }
  return K;
}

inline Mat fock(const Mat& h, const EriTensor& eri, const Mat& D) {
  return h + build_J(eri, D) - build_K(eri, D);
}

// E = 1/2 tr(D (h + F)); exact for F built from the same D.
inline double hf_energy(const Mat& D, const Mat& h, const Mat& F) {
  return 0.5 * (D.cwiseProduct(h + F)).sum();
}

// Two-slot energy E(D1, D2) = tr(D1 h) + tr(D2 F(D1)).  Symmetric in its
// arguments and equal to 2 E(D) on the diagonal; the Roothaan sweep descends
// along it, which is what the per-iteration trace records.
inline double bivariate_energy(const Mat& D1, const Mat& D2, const Mat& h, const Mat& F1) {
  return (D1.cwiseProduct(h)).sum() + (D2.cwiseProduct(F1)).sum();
}

// Generalized Coulomb/exchange matrices over occupied-orbital pairs:
//   Jgen(i,j)_{mu nu} = sum_{la si} (mu nu|la si) C_{la i} C_{si j}
//   Kgen(i,j)_{mu nu} = sum_{la si} (mu la|si nu) C_{la i} C_{si j}
// Kgen(i,j)^T = Kgen(j,i) by the 8-fold integral symmetry.
inline Mat build_Jgen(const EriTensor& eri, const Vec& ci, const Vec& cj) {
  int n = eri.n;
  Mat J = Mat::Zero(n, n);
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu <= mu; ++nu) {
      double acc = 0.0;
      for (int la = 0; la < n; ++la)
        for (int si = 0; si < n; ++si) acc += eri(mu, nu, la, si) * ci(la) * cj(si);
      J(mu, nu) = J(nu, mu) = acc;
    }
  return J;
}

inline Mat build_Kgen(const EriTensor& eri, const Vec& ci, const Vec& cj) {
  int n = eri.n;
  Mat K = Mat::Zero(n, n);
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu) {
      double acc = 0.0;
      for (int la = 0; la < n; ++la)
        for (int si = 0; si < n; ++si) acc += eri(mu, la, si, nu) * ci(la) * cj(si);
      K(mu, nu) = acc;
    }
  return K;
}

// ---------------------------------------------------------------------------
// Tangent/dual vectors on the constraint manifold.  A point carries N orbital
// columns and N multipliers; directions pair via
//   <<[W1,e1],[W2,e2]>> = sum_i 2 w1_i . w2_i + e1 . e2
// with plain dot products (metric factors live inside the matrices).
// ---------------------------------------------------------------------------

struct Tangent {
  Mat W;   // n x N direction columns
  Vec de;  // N multiplier components
};

inline double pairing(const Tangent& a, const Tangent& b) {
  return 2.0 * (a.W.cwiseProduct(b.W)).sum() + a.de.dot(b.de);
}

// Gradient dual of the Lagrangian f(Phi, e) = E(Phi) - sum_i e_i (<phi_i,phi_i> - 1):
//   orbital block g_i = (F - e_i S) c_i, multiplier block ge_i = 1 - c_i^T S c_i.
// Contract against a tangent with pairing() to get directional derivatives.
inline Tangent lagrangian_gradient(const Mat& F, const Mat& S, const Mat& C, const Vec& eps) {
  int N = static_cast<int>(C.cols());
  Tangent g;
  g.W.resize(C.rows(), N);
  g.de.resize(N);
  for (int i = 0; i < N; ++i) {
    g.W.col(i) = (F - eps(i) * S) * C.col(i);
    g.de(i) = 1.0 - C.col(i).dot(S * C.col(i));
  }
  return g;
}

// Stationarity residual max_i |(F - eps_i S) c_i|_2 for a fresh Fock matrix.
inline double orbital_residual(const Mat& F, const Mat& S, const Mat& C, const Vec& eps) {
  double worst = 0.0;
  for (int i = 0; i < C.cols(); ++i)
    worst = std::max(worst, ((F - eps(i) * S) * C.col(i)).norm());
  return worst;
}

// ---------------------------------------------------------------------------
// Frozen-orbital ionization identity.  At a critical point the energy splits
// exactly as E_N = E_{N-1}(first N-1 orbitals, frozen) + eps_N; the residual
// of that identity is a stationarity diagnostic (zero only at true critical
// points).  For N = 1 the frozen system is the vacuum, E_0 = 0.
// ---------------------------------------------------------------------------

struct KoopmansReport {
  double e_frozen = 0.0;    // energy of the frozen (N-1)-orbital determinant
  double eps_top = 0.0;     // highest occupied multiplier
  double e_total = 0.0;     // energy of the N-orbital state
  double residual = 0.0;    // |e_total - (e_frozen + eps_top)|
  double ionization = 0.0;  // e_frozen - e_total
};

inline KoopmansReport koopmans_split(const IntegralTables& t, const Mat& C, const Vec& eps,
                                     double e_total) {
  int N = static_cast<int>(C.cols());
  KoopmansReport r;
  r.e_total = e_total;
  r.eps_top = eps(N - 1);
  if (N == 1) {
    r.e_frozen = 0.0;
  } else {
    Mat Cf = C.leftCols(N - 1);
    Mat Df = density(Cf);
    Mat Ff = fock(t.hcore, t.eri, Df);
    r.e_frozen = hf_energy(Df, t.hcore, Ff);
  }
  r.residual = std::abs(r.e_total - (r.e_frozen + r.eps_top));
  r.ionization = r.e_frozen - r.e_total;
  return r;
}

// ---------------------------------------------------------------------------
// Random S-orthonormal frames (starting guesses, probe directions).
// Gram-Schmidt in the S metric; a column that collapses below 1e-8 is
// redrawn, so the result is always a full frame.
// ---------------------------------------------------------------------------

inline Mat random_s_orthonormal(Rng& rng, const Mat& S, int N) {
  int n = static_cast<int>(S.rows());
  Mat C(n, N);
  for (int i = 0; i < N; ++i) {
    for (int attempt = 0;; ++attempt) {
      Vec v(n);
      for (int k = 0; k < n; ++k) v(k) = rng.next_normal();
      for (int j = 0; j < i; ++j) v -= C.col(j) * (C.col(j).dot(S * v));
      double nrm = std::sqrt(v.dot(S * v));
      if (nrm > 1e-8) {
        C.col(i) = v / nrm;
        break;
      }
      if (attempt > 100) throw std::runtime_error("random frame: S metric degenerate");
    }
  }
  return C;
}

}  // namespace hflab
