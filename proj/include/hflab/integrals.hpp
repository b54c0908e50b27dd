#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "hflab/linalg.hpp"
#include "hflab/molbasis.hpp"

namespace hflab {

// ---------------------------------------------------------------------------
// Boys function F_m(x) = \int_0^1 t^{2m} exp(-x t^2) dt.
// Series + downward recursion below x = 35, leading asymptotics above (the
// dropped remainder is O(e^{-35}) ~ 6e-16, inside the 1e-13 budget).
// Supports m up to boys_max_m = 4*l_max + 2 with l_max = 1.
// ---------------------------------------------------------------------------

inline constexpr int boys_max_m = 6;

inline void boys_array(int mmax, double x, double* F) {
  if (x < 35.0) {
    // series at the top order, then stable downward recursion
    double term = 1.0 / (2.0 * mmax + 1.0);
    double sum = term;
    for (int k = 1; k < 300; ++k) {
      term *= 2.0 * x / (2.0 * mmax + 2.0 * k + 1.0);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    double ex = std::exp(-x);
    F[mmax] = ex * sum;
    for (int m = mmax - 1; m >= 0; --m) F[m] = (2.0 * x * F[m + 1] + ex) / (2.0 * m + 1.0);
  } else {
    double sx = std::sqrt(M_PI / x);
    double df = 1.0;  // (2m-1)!!
    double pw = 1.0;  // (2x)^m
    for (int m = 0; m <= mmax; ++m) {
      F[m] = df / (2.0 * pw) * sx;
      df *= 2.0 * m + 1.0;
      pw *= 2.0 * x;
    }
  }
}

inline double boys(int m, double x) {
  double F[boys_max_m + 25];
  boys_array(m, x, F);
  return F[m];
}

// ---------------------------------------------------------------------------
// Cartesian basis functions (shells expanded to components).
// ---------------------------------------------------------------------------

struct BasisFunction {
  std::array<double, 3> A;   // center
  std::array<int, 3> pw;     // cartesian powers; total <= 1
  std::vector<double> a;     // exponents
  std::vector<double> c;     // raw contraction coefficients
  int shell = 0;             // owning shell index
};

inline std::vector<BasisFunction> expand_functions(const Molecule& mol, const BasisSet& basis) {
  std::vector<BasisFunction> fns;
  for (size_t is = 0; is < basis.shells.size(); ++is) {
    const Shell& s = basis.shells[is];
    auto raw = raw_coefficients(s);
    int ncomp = (s.l == 0) ? 1 : 3;
    for (int comp = 0; comp < ncomp; ++comp) {
      BasisFunction f;
      f.A = mol.atoms[static_cast<size_t>(s.center)].pos;
      f.pw = {0, 0, 0};
      if (s.l == 1) f.pw[comp] = 1;
      f.a = s.exps;
      f.c = raw;
      f.shell = static_cast<int>(is);
      fns.push_back(std::move(f));
    }
  }
  return fns;
}

namespace md {

// Hermite expansion coefficients E_t^{ij} for a 1D Gaussian pair.
// imax/jmax <= 3 here (l = 1 plus the +2 the kinetic formula needs).
struct ETable {
  double e[4][6][10];  // [i][j][t]

  ETable(double a, double b, double AB, int imax, int jmax) {
    std::memset(e, 0, sizeof e);
    double p = a + b;
    double mu = a * b / p;
    double XPA = -b / p * AB;  // P - A with AB = A - B
    double XPB = a / p * AB;   // P - B
    e[0][0][0] = std::exp(-mu * AB * AB);
    for (int i = 0; i < imax; ++i)
      for (int t = 0; t <= i + 1; ++t) {
        double v = XPA * e[i][0][t];
        if (t > 0) v += e[i][0][t - 1] / (2.0 * p);
        if (t + 1 <= i) v += (t + 1.0) * e[i][0][t + 1];
        e[i + 1][0][t] = v;
      }
    for (int j = 0; j < jmax; ++j)
      for (int i = 0; i <= imax; ++i)
        for (int t = 0; t <= i + j + 1; ++t) {
          double v = XPB * e[i][j][t];
          if (t > 0) v += e[i][j][t - 1] / (2.0 * p);
          if (t + 1 <= i + j) v += (t + 1.0) * e[i][j][t + 1];
          e[i][j + 1][t] = v;
        }
  }
};

// Hermite Coulomb integrals R_{tuv} (auxiliary index folded in).
struct RTable {
  int L;
  double r[5][5][5];

  RTable(double p, const std::array<double, 3>& PC, int Ltot) : L(Ltot) {
    double x = p * (PC[0] * PC[0] + PC[1] * PC[1] + PC[2] * PC[2]);
    double F[boys_max_m + 25];
    boys_array(Ltot, x, F);
    // Rm[m][t][u][v], m + t + u + v <= Ltot
    static thread_local double Rm[9][5][5][5];
    std::memset(Rm, 0, sizeof Rm);
    double mp = 1.0;
    for (int m = 0; m <= Ltot; ++m) {
      Rm[m][0][0][0] = mp * F[m];
      mp *= -2.0 * p;
    }
    for (int s = 1; s <= Ltot; ++s)
      for (int m = 0; m <= Ltot - s; ++m)
        for (int t = 0; t <= s; ++t)
          for (int u = 0; u <= s - t; ++u) {
            int v = s - t - u;
            double val;
            if (t >= 1) {
              val = PC[0] * Rm[m + 1][t - 1][u][v];
              if (t >= 2) val += (t - 1.0) * Rm[m + 1][t - 2][u][v];
            } else if (u >= 1) {
              val = PC[1] * Rm[m + 1][t][u - 1][v];
              if (u >= 2) val += (u - 1.0) * Rm[m + 1][t][u - 2][v];
            } else {
              val = PC[2] * Rm[m + 1][t][u][v - 1];
              if (v >= 2) val += (v - 1.0) * Rm[m + 1][t][u][v - 2];
            }
            Rm[m][t][u][v] = val;
          }
    std::memcpy(r, Rm[0], sizeof r);
  }
};

// 1D overlap factor including the sqrt(pi/p) measure.
inline double s1d(const ETable& E, int i, int j, double p) {
  return E.e[i][j][0] * std::sqrt(M_PI / p);
}

// <g_i | -d^2/dx^2 | g_j> via the overlap table extended two powers up.
inline double k1d(const ETable& E, int i, int j, double b, double p) {
  double v = -4.0 * b * b * s1d(E, i, j + 2, p) + 2.0 * b * (2.0 * j + 1.0) * s1d(E, i, j, p);
  if (j >= 2) v -= j * (j - 1.0) * s1d(E, i, j - 2, p);
  return v;
}

}  // namespace md

// ---------------------------------------------------------------------------
// Electron-repulsion tensor with full 8-fold symmetric storage.
// ---------------------------------------------------------------------------

struct EriTensor {
  int n = 0;
  std::vector<double> v;

  void resize(int nn) {
    n = nn;
    v.assign(static_cast<size_t>(nn) * nn * nn * nn, 0.0);
  }
  double& at(int i, int j, int k, int l) {
    return v[((static_cast<size_t>(i) * n + j) * n + k) * n + l];
  }
  double operator()(int i, int j, int k, int l) const {
    return v[((static_cast<size_t>(i) * n + j) * n + k) * n + l];
  }
};

struct IntegralTables {
  int n = 0;
  int l_max = 0;
  Convention conv = Convention::paper;
  Mat S, T, Vnuc, hcore;
  EriTensor eri;
  double s_min = 0.0, s_max = 0.0;
  double cond_S = 0.0;
  double enuc = 0.0;  // informational; the energy functional has no nuclear term
};

namespace md {

inline double prim_overlap(const std::array<double, 3>& A, const std::array<int, 3>& pa, double a,
                           const std::array<double, 3>& B, const std::array<int, 3>& pb, double b) {
  double p = a + b;
  double out = 1.0;
  for (int d = 0; d < 3; ++d) {
    ETable E(a, b, A[d] - B[d], pa[d], pb[d]);
    out *= s1d(E, pa[d], pb[d], p);
  }
  return out;
}

inline double prim_kinetic(const std::array<double, 3>& A, const std::array<int, 3>& pa, double a,
                           const std::array<double, 3>& B, const std::array<int, 3>& pb, double b) {
  double p = a + b;
  double s[3], k[3];
  for (int d = 0; d < 3; ++d) {
    ETable E(a, b, A[d] - B[d], pa[d], pb[d] + 2);
    s[d] = s1d(E, pa[d], pb[d], p);
    k[d] = k1d(E, pa[d], pb[d], b, p);
  }
  return k[0] * s[1] * s[2] + s[0] * k[1] * s[2] + s[0] * s[1] * k[2];
}

inline double prim_nuclear(const std::array<double, 3>& A, const std::array<int, 3>& pa, double a,
                           const std::array<double, 3>& B, const std::array<int, 3>& pb, double b,
                           const Molecule& mol) {
  double p = a + b;
  std::array<double, 3> P;
  for (int d = 0; d < 3; ++d) P[d] = (a * A[d] + b * B[d]) / p;
  ETable Ex(a, b, A[0] - B[0], pa[0], pb[0]);
  ETable Ey(a, b, A[1] - B[1], pa[1], pb[1]);
  ETable Ez(a, b, A[2] - B[2], pa[2], pb[2]);
  int Lx = pa[0] + pb[0], Ly = pa[1] + pb[1], Lz = pa[2] + pb[2];
  double total = 0.0;
  for (const Atom& atom : mol.atoms) {
    std::array<double, 3> PC = {P[0] - atom.pos[0], P[1] - atom.pos[1], P[2] - atom.pos[2]};
    RTable R(p, PC, Lx + Ly + Lz);
    double acc = 0.0;
    for (int t = 0; t <= Lx; ++t)
      for (int u = 0; u <= Ly; ++u)
        for (int w = 0; w <= Lz; ++w)
          acc += Ex.e[pa[0]][pb[0]][t] * Ey.e[pa[1]][pb[1]][u] * Ez.e[pa[2]][pb[2]][w] * R.r[t][u][w];
    total += -atom.Z * (2.0 * M_PI / p) * acc;
  }
  return total;
}

inline double prim_eri(const std::array<double, 3>& A, const std::array<int, 3>& pa, double a,
                       const std::array<double, 3>& B, const std::array<int, 3>& pb, double b,
                       const std::array<double, 3>& C, const std::array<int, 3>& pc, double c,
                       const std::array<double, 3>& D, const std::array<int, 3>& pd, double d) {
  double p = a + b, q = c + d;
  std::array<double, 3> P, Q, PQ;
  for (int dd = 0; dd < 3; ++dd) {
    P[dd] = (a * A[dd] + b * B[dd]) / p;
    Q[dd] = (c * C[dd] + d * D[dd]) / q;
    PQ[dd] = P[dd] - Q[dd];
  }
  ETable E1x(a, b, A[0] - B[0], pa[0], pb[0]), E1y(a, b, A[1] - B[1], pa[1], pb[1]),
      E1z(a, b, A[2] - B[2], pa[2], pb[2]);
  ETable E2x(c, d, C[0] - D[0], pc[0], pd[0]), E2y(c, d, C[1] - D[1], pc[1], pd[1]),
      E2z(c, d, C[2] - D[2], pc[2], pd[2]);
  int L1x = pa[0] + pb[0], L1y = pa[1] + pb[1], L1z = pa[2] + pb[2];
  int L2x = pc[0] + pd[0], L2y = pc[1] + pd[1], L2z = pc[2] + pd[2];
  double theta = p * q / (p + q);
  RTable R(theta, PQ, L1x + L1y + L1z + L2x + L2y + L2z);
  double acc = 0.0;
  for (int t = 0; t <= L1x; ++t)
    for (int u = 0; u <= L1y; ++u)
      for (int w = 0; w <= L1z; ++w) {
        double e1 = E1x.e[pa[0]][pb[0]][t] * E1y.e[pa[1]][pb[1]][u] * E1z.e[pa[2]][pb[2]][w];
        if (e1 == 0.0) continue;
        for (int tt = 0; tt <= L2x; ++tt)
          for (int uu = 0; uu <= L2y; ++uu)
            for (int ww = 0; ww <= L2z; ++ww) {
              double e2 = E2x.e[pc[0]][pd[0]][tt] * E2y.e[pc[1]][pd[1]][uu] * E2z.e[pc[2]][pd[2]][ww];
              if (e2 == 0.0) continue;
              double sign = ((tt + uu + ww) & 1) ? -1.0 : 1.0;
              acc += e1 * e2 * sign * R.r[t + tt][u + uu][w + ww];
            }
      }
  return 2.0 * std::pow(M_PI, 2.5) / (p * q * std::sqrt(p + q)) * acc;
}

}  // namespace md

// --- contracted integrals over basis functions -------------------------------

inline double overlap_element(const BasisFunction& f, const BasisFunction& g) {
  double acc = 0.0;
  for (size_t i = 0; i < f.a.size(); ++i)
    for (size_t j = 0; j < g.a.size(); ++j)
      acc += f.c[i] * g.c[j] * md::prim_overlap(f.A, f.pw, f.a[i], g.A, g.pw, g.a[j]);
  return acc;
}

inline double kinetic_element(const BasisFunction& f, const BasisFunction& g) {
  double acc = 0.0;
  for (size_t i = 0; i < f.a.size(); ++i)
    for (size_t j = 0; j < g.a.size(); ++j)
      acc += f.c[i] * g.c[j] * md::prim_kinetic(f.A, f.pw, f.a[i], g.A, g.pw, g.a[j]);
  return acc;
}

inline double nuclear_element(const BasisFunction& f, const BasisFunction& g, const Molecule& mol) {
  double acc = 0.0;
  for (size_t i = 0; i < f.a.size(); ++i)
    for (size_t j = 0; j < g.a.size(); ++j)
      acc += f.c[i] * g.c[j] * md::prim_nuclear(f.A, f.pw, f.a[i], g.A, g.pw, g.a[j], mol);
  return acc;
}

inline double eri_element(const BasisFunction& f, const BasisFunction& g, const BasisFunction& h,
                          const BasisFunction& k) {
  double acc = 0.0;
  for (size_t i = 0; i < f.a.size(); ++i)
    for (size_t j = 0; j < g.a.size(); ++j) {
      double cij = f.c[i] * g.c[j];
      for (size_t m = 0; m < h.a.size(); ++m)
        for (size_t l = 0; l < k.a.size(); ++l)
          acc += cij * h.c[m] * k.c[l] *
                 md::prim_eri(f.A, f.pw, f.a[i], g.A, g.pw, g.a[j], h.A, h.pw, h.a[m], k.A, k.pw,
                              k.a[l]);
    }
  return acc;
}

inline Mat overlap_matrix(const Molecule& mol, const BasisSet& basis) {
  auto fns = expand_functions(mol, basis);
  int n = static_cast<int>(fns.size());
  Mat S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) S(i, j) = S(j, i) = overlap_element(fns[i], fns[j]);
  return S;
}

inline Mat kinetic_matrix(const Molecule& mol, const BasisSet& basis) {
  auto fns = expand_functions(mol, basis);
  int n = static_cast<int>(fns.size());
  Mat T(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) T(i, j) = T(j, i) = kinetic_element(fns[i], fns[j]);
  return T;
}

inline Mat nuclear_matrix(const Molecule& mol, const BasisSet& basis) {
  auto fns = expand_functions(mol, basis);
  int n = static_cast<int>(fns.size());
  Mat V(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) V(i, j) = V(j, i) = nuclear_element(fns[i], fns[j], mol);
  return V;
}

inline EriTensor eri_tensor(const Molecule& mol, const BasisSet& basis) {
  auto fns = expand_functions(mol, basis);
  int n = static_cast<int>(fns.size());
  EriTensor eri;
  eri.resize(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      int ij = i * (i + 1) / 2 + j;
      for (int k = 0; k <= i; ++k)
        for (int l = 0; l <= k; ++l) {
          int kl = k * (k + 1) / 2 + l;
          if (kl > ij) continue;
          double val = eri_element(fns[i], fns[j], fns[k], fns[l]);
          eri.at(i, j, k, l) = val;
          eri.at(j, i, k, l) = val;
          eri.at(i, j, l, k) = val;
          eri.at(j, i, l, k) = val;
          eri.at(k, l, i, j) = val;
          eri.at(l, k, i, j) = val;
          eri.at(k, l, j, i) = val;
          eri.at(l, k, j, i) = val;
        }
    }
  return eri;
}

inline double nuclear_repulsion(const Molecule& mol) {
  double e = 0.0;
  for (size_t i = 0; i < mol.atoms.size(); ++i)
    for (size_t j = i + 1; j < mol.atoms.size(); ++j) {
      double d2 = 0.0;
      for (int d = 0; d < 3; ++d) {
        double t = mol.atoms[i].pos[d] - mol.atoms[j].pos[d];
        d2 += t * t;
      }
      e += mol.atoms[i].Z * mol.atoms[j].Z / std::sqrt(d2);
    }
  return e;
}

inline IntegralTables build_tables(const Molecule& mol, const BasisSet& basis) {
  IntegralTables t;
  t.n = basis.n_functions();
  t.l_max = basis.max_l();
  t.conv = Convention::paper;
  t.S = overlap_matrix(mol, basis);
  t.T = kinetic_matrix(mol, basis);
  t.Vnuc = nuclear_matrix(mol, basis);
  t.hcore = t.T + t.Vnuc;
  t.eri = eri_tensor(mol, basis);
  t.enuc = nuclear_repulsion(mol);
  Vec sev = sym_eigvals(t.S);
  t.s_min = sev(0);
  t.s_max = sev(sev.size() - 1);
  t.cond_S = t.s_min > 0.0 ? t.s_max / t.s_min : std::numeric_limits<double>::infinity();
  return t;
}

// ---------------------------------------------------------------------------
// Binary dump: header (magic, version, n, l_max, convention), the three
// matrices row-major, then the canonical unique eri elements, all little-
// endian float64.  Canonical order: mu >= nu, lam >= sig, pair(mu,nu) >=
// pair(lam,sig), pairs ordered by the triangular index mu(mu+1)/2 + nu.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& os, double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double x;
  std::memcpy(&x, &u, 8);
  return x;
}

}  // namespace detail

inline constexpr std::uint32_t tables_magic = 0x54494648;  // "HFIT"

inline void dump_tables(const IntegralTables& t, std::ostream& os) {
  detail::put_u32(os, tables_magic);
  detail::put_u32(os, 1);
  detail::put_u32(os, static_cast<std::uint32_t>(t.n));
  detail::put_u32(os, static_cast<std::uint32_t>(t.l_max));
  detail::put_u32(os, t.conv == Convention::paper ? 0u : 1u);
  for (const Mat* m : {&t.S, &t.T, &t.Vnuc})
    for (int i = 0; i < t.n; ++i)
      for (int j = 0; j < t.n; ++j) detail::put_f64(os, (*m)(i, j));
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j <= i; ++j) {
      int ij = i * (i + 1) / 2 + j;
      for (int k = 0; k <= i; ++k)
        for (int l = 0; l <= k; ++l) {
          if (k * (k + 1) / 2 + l > ij) continue;
          detail::put_f64(os, t.eri(i, j, k, l));
        }
    }
}

inline IntegralTables load_tables(std::istream& is) {
  if (detail::get_u32(is) != tables_magic) throw ParseError("bad integral dump: wrong magic");
  if (detail::get_u32(is) != 1) throw ParseError("bad integral dump: unsupported version");
  IntegralTables t;
  t.n = static_cast<int>(detail::get_u32(is));
  t.l_max = static_cast<int>(detail::get_u32(is));
  t.conv = detail::get_u32(is) == 0 ? Convention::paper : Convention::standard;
  if (!is || t.n < 1 || t.n > 4096 || t.l_max < 0 || t.l_max > 1)
    throw ParseError("bad integral dump: corrupt header");
  t.S.resize(t.n, t.n);
  t.T.resize(t.n, t.n);
  t.Vnuc.resize(t.n, t.n);
  for (Mat* m : {&t.S, &t.T, &t.Vnuc})
    for (int i = 0; i < t.n; ++i)
      for (int j = 0; j < t.n; ++j) (*m)(i, j) = detail::get_f64(is);
  t.hcore = t.T + t.Vnuc;
  t.eri.resize(t.n);
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j <= i; ++j) {
      int ij = i * (i + 1) / 2 + j;
      for (int k = 0; k <= i; ++k)
        for (int l = 0; l <= k; ++l) {
          if (k * (k + 1) / 2 + l > ij) continue;
          double val = detail::get_f64(is);
          t.eri.at(i, j, k, l) = val;
          t.eri.at(j, i, k, l) = val;
          t.eri.at(i, j, l, k) = val;
          t.eri.at(j, i, l, k) = val;
          t.eri.at(k, l, i, j) = val;
          t.eri.at(l, k, i, j) = val;
          t.eri.at(k, l, j, i) = val;
          t.eri.at(l, k, j, i) = val;
        }
    }
  if (!is) throw ParseError("bad integral dump: truncated stream");
  Vec sev = sym_eigvals(t.S);
  t.s_min = sev(0);
  t.s_max = sev(sev.size() - 1);
  t.cond_S = t.s_min > 0.0 ? t.s_max / t.s_min : std::numeric_limits<double>::infinity();
  return t;
}

}  // namespace hflab
