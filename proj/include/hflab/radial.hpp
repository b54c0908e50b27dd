#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "hflab/linalg.hpp"
#include "hflab/util.hpp"

namespace hflab {

class RadialError : public std::runtime_error {
 public:
  explicit RadialError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Radial HF for s-symmetric atoms on a log grid, in the -Delta convention:
//   [-d^2/dr^2 - Z/r + R(r)] u_i - sum_{j != i} W_ij(r) u_j = eps_i u_i
// with u = r phi.  In x = ln r with w = u / sqrt(r) the operator becomes
//   -w'' + [1/4 + r^2 (V + R)] w = eps r^2 w
// discretized with the Numerov (1,10,1)/12 weighting: A w = eps B w, both
// sides sharing the weighting so the scheme stays fourth order.
//
// Boundaries: left ghost node carries w_{-1} = beta w_0 with beta =
// exp(-dx/2), i.e. u ~ r at the origin; right end is a hard Dirichlet wall.
// ---------------------------------------------------------------------------

struct RadialGrid {
  int M = 0;
  double rmin = 0.0, rmax = 0.0, dx = 0.0;
  Vec r, R2;
};

inline RadialGrid make_radial_grid(double rmin, double rmax, int M) {
  if (!(rmin > 0.0) || !(rmax > rmin)) throw RadialError("radial grid: need 0 < rmin < rmax");
  if (rmax < 30.0) throw RadialError("radial grid: rmax must be at least 30");
  if (M < 2000) throw RadialError("radial grid: need at least 2000 points");
  RadialGrid g;
  g.M = M;
  g.rmin = rmin;
  g.rmax = rmax;
  double x0 = std::log(rmin), x1 = std::log(rmax);
  g.dx = (x1 - x0) / (M - 1);
  g.r.resize(M);
  g.R2.resize(M);
  for (int k = 0; k < M; ++k) {
    g.r(k) = std::exp(x0 + k * g.dx);
    g.R2(k) = g.r(k) * g.r(k);
  }
  return g;
}

struct RadialOptions {
  double damping = 0.3;
  int max_iter = 200;
  double tol_energy = 1e-12;
};

struct RadialSolution {
  RadialGrid grid;
  double Z = 0.0;
  int N = 0;
  bool converged = false;
  int iterations = 0;
  double E = 0.0;
  Vec eps;  // ascending
  Mat W;    // M x N, w_i columns; trapezoid-orthonormal: sum w_i w_j r^2 dx = delta_ij
};

class RadialSolver {
 public:
  RadialSolver(double Z, int N, RadialGrid grid) : Z_(Z), N_(N), g_(std::move(grid)) {
    if (!(Z > 0.0)) throw RadialError("radial: Z must be positive");
    if (N < 1) throw RadialError("radial: N must be at least 1");
    V_ = -Z_ * g_.r.cwiseInverse();
    beta_ = std::exp(-0.5 * g_.dx);
    rgh_ = g_.rmin * beta_ * beta_;  // exp(x0 - dx)
    qgh_bare_ = 0.25 + rgh_ * rgh_ * (-Z_ / rgh_);
  }

  const RadialGrid& grid() const { return g_; }

  // Numerov weighting N(f): (f_{k-1} + 10 f_k + f_{k+1}) / 12.
  Vec nmul(const Vec& f) const {
    const int M = g_.M;
    Vec out = (10.0 / 12.0) * f;
    for (int k = 0; k + 1 < M; ++k) out(k) += f(k + 1) / 12.0;
    for (int k = 1; k < M; ++k) out(k) += f(k - 1) / 12.0;
    return out;
  }

  Vec Tmul(const Vec& w) const {
    const int M = g_.M;
    const double idx2 = 1.0 / (g_.dx * g_.dx);
    Vec out = 2.0 * idx2 * w;
    for (int k = 0; k + 1 < M; ++k) out(k) -= idx2 * w(k + 1);
    for (int k = 1; k < M; ++k) out(k) -= idx2 * w(k - 1);
    out(0) -= idx2 * beta_ * w(0);  // left ghost w_{-1} = beta w_0
    return out;
  }

  Vec Bmul(const Vec& w) const {
    Vec out = nmul(g_.R2.cwiseProduct(w));
    out(0) += (rgh_ * rgh_ / 12.0) * beta_ * w(0);
    return out;
  }

  // Monopole Poisson solve: input f is a physical pair density on the grid
  // (sum f r^2 dx carries the charge); returns W(r) = sum_l m_l / max(r, r_l).
  Vec coulomb(const Vec& f) const {
    const int M = g_.M;
    Vec m = f.cwiseProduct(g_.R2) * g_.dx;
    Vec out(M);
    double pref = 0.0;
    for (int k = 0; k < M; ++k) {
      pref += m(k);
      out(k) = pref / g_.r(k);
    }
    double suf = 0.0;
    for (int k = M - 1; k >= 0; --k) {
      suf += m(k) / g_.r(k);
      out(k) += suf - m(k) / g_.r(k);
    }
    return out;
  }

  // Exchange as a weighted history of orbital sets: the kernel of set s is
  // dx sum_j w_j w_j^T scaled by r^2 r'^2 / max(r,r'), and applying it to w
  // costs one Poisson solve per (set, orbital) instead of an M^2 product.
  struct ExchangeSet {
    double weight = 0.0;
    Mat W;  // M x N physical columns
  };
  using ExchangeHistory = std::vector<ExchangeSet>;

  Vec apply_exchange(const ExchangeHistory& xh, const Vec& w) const {
    Vec out = Vec::Zero(g_.M);
    for (const ExchangeSet& s : xh)
      for (int j = 0; j < s.W.cols(); ++j) {
        Vec wj = s.W.col(j);
        out += s.weight * wj.cwiseProduct(g_.R2.cwiseProduct(coulomb(wj.cwiseProduct(w))));
      }
    return out;
  }

  Vec Amul(const Vec& w, const Vec& Rhart, const ExchangeHistory& xh) const {
    Vec q = Vec::Constant(g_.M, 0.25) + g_.R2.cwiseProduct(V_ + Rhart);
    Vec out = Tmul(w) + nmul(q.cwiseProduct(w));
    double qgh = qgh_bare_ + rgh_ * rgh_ * Rhart(0);  // Hartree frozen at the first node
    out(0) += (qgh / 12.0) * beta_ * w(0);
    if (!xh.empty()) out -= nmul(apply_exchange(xh, w));
    return out;
  }

  // Tridiagonal factor of (A_local - sigma B); the exchange term is left out,
  // which is exactly what the Davidson preconditioner wants.
  TriLU band_factor(const Vec& Rhart, double sigma) const {
    const int M = g_.M;
    const double idx2 = 1.0 / (g_.dx * g_.dx);
    Vec q = Vec::Constant(M, 0.25) + g_.R2.cwiseProduct(V_ + Rhart);
    Vec Ad = Vec::Constant(M, 2.0 * idx2) + (10.0 / 12.0) * q - sigma * (10.0 / 12.0) * g_.R2;
    double qgh = qgh_bare_ + rgh_ * rgh_ * Rhart(0);
    Ad(0) += (-idx2 + qgh / 12.0 - sigma * (rgh_ * rgh_ / 12.0)) * beta_;
    Vec dl(M - 1), du(M - 1);
    for (int k = 0; k < M - 1; ++k) {
      dl(k) = -idx2 + q(k) / 12.0 - sigma * g_.R2(k) / 12.0;          // A(k+1, k)
      du(k) = -idx2 + q(k + 1) / 12.0 - sigma * g_.R2(k + 1) / 12.0;  // A(k, k+1)
    }
    return TriLU(dl, Ad, du);
  }

  // Lowest nev eigenpairs of A(Rhart, xh) w = eps B w.  Davidson with the
  // shifted tridiagonal preconditioner; seeds are the previous orbitals plus
  // deflated inverse-iteration vectors near the hydrogenic ground level.
  void solve_fock(const Vec& Rhart, const ExchangeHistory& xh, int nev,
                  const std::vector<Vec>& sub0, Vec& eps_out, Mat& W_out) const {
    const int M = g_.M;
    auto Bdot = [&](const Vec& a, const Vec& b) { return a.dot(Bmul(b)); };

    std::vector<Vec> Vs;
    for (const Vec& v0 : sub0) Vs.push_back(v0);
    TriLU lu0 = band_factor(Rhart, -Z_ * Z_ / 4.0 - 1.0);
    Vec v = Vec::Ones(M);
    for (int k = 0; k < nev + 2; ++k) {
      for (int pass = 0; pass < 6; ++pass) {
        v = lu0.solve(Bmul(v));
        for (const Vec& u : Vs) v -= u * Bdot(u, v);
        double nv = std::sqrt(Bdot(v, v));
        v /= nv;
      }
      Vs.push_back(v);
      Rng rng(mix_seed(0x0da71d50ULL, static_cast<std::uint64_t>(k)));
      v.resize(M);
      for (int i = 0; i < M; ++i) v(i) = rng.next_normal();
    }

    std::vector<Vec> Q;
    for (Vec& cand : Vs) {
      for (const Vec& u : Q) cand -= u * Bdot(u, cand);
      double nv = std::sqrt(std::abs(Bdot(cand, cand)));
      if (nv > 1e-10) Q.push_back(cand / nv);
    }

    std::vector<Vec> Vsp = Q, X, AX;
    Vec th;
    for (int it = 0; it < 60; ++it) {
      const int k = static_cast<int>(Vsp.size());
      std::vector<Vec> AV(static_cast<size_t>(k));
      for (int j = 0; j < k; ++j) AV[static_cast<size_t>(j)] = Amul(Vsp[static_cast<size_t>(j)], Rhart, xh);
      Mat Asub(k, k);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) Asub(i, j) = Vsp[static_cast<size_t>(i)].dot(AV[static_cast<size_t>(j)]);
      Asub = 0.5 * (Asub + Asub.transpose()).eval();
      Mat Y;
      sym_eig(Asub, th, Y);
      const int nv = std::min(nev, k);
      X.assign(static_cast<size_t>(nv), Vec());
      AX.assign(static_cast<size_t>(nv), Vec());
      for (int j = 0; j < nv; ++j) {
        Vec xj = Vec::Zero(M), axj = Vec::Zero(M);
        for (int i = 0; i < k; ++i) {
          xj += Y(i, j) * Vsp[static_cast<size_t>(i)];
          axj += Y(i, j) * AV[static_cast<size_t>(i)];
        }
        X[static_cast<size_t>(j)] = xj;
        AX[static_cast<size_t>(j)] = axj;
      }
      std::vector<double> rn(static_cast<size_t>(nv));
      std::vector<Vec> res(static_cast<size_t>(nv));
      double worst = 0.0;
      for (int j = 0; j < nv; ++j) {
        res[static_cast<size_t>(j)] = AX[static_cast<size_t>(j)] - th(j) * Bmul(X[static_cast<size_t>(j)]);
        rn[static_cast<size_t>(j)] = res[static_cast<size_t>(j)].norm();
        worst = std::max(worst, rn[static_cast<size_t>(j)]);
      }
      if (worst < 1e-9) break;
      std::vector<Vec> corrections;
      for (int j = 0; j < nv; ++j) {
        if (rn[static_cast<size_t>(j)] < 1e-9) continue;
        TriLU luj = band_factor(Rhart, th(j));
        corrections.push_back(luj.solve(res[static_cast<size_t>(j)]));
      }
      Vsp = X;
      for (Vec& t : corrections) {
        for (const Vec& u : Vsp) t -= u * Bdot(u, t);
        double nt = std::sqrt(std::abs(Bdot(t, t)));
        if (nt > 1e-9) Vsp.push_back(t / nt);
      }
      if (static_cast<int>(Vsp.size()) == nv) break;
    }
    if (static_cast<int>(X.size()) < nev)
      throw RadialError("radial eigensolver: subspace collapsed below the requested count");

    eps_out.resize(nev);
    W_out.resize(M, nev);
    for (int j = 0; j < nev; ++j) {
      const Vec& wj = X[static_cast<size_t>(j)];
      eps_out(j) = wj.dot(Amul(wj, Rhart, xh)) / Bdot(wj, wj);
      W_out.col(j) = wj / std::sqrt(g_.dx * Bdot(wj, wj));  // physical: sum w^2 r^2 dx = 1
    }
  }

  // Bare-h Rayleigh quotient of a B-scale vector (ghost term included).
  double bare_h_expectation(const Vec& wB) const {
    Vec q0 = Vec::Constant(g_.M, 0.25) + g_.R2.cwiseProduct(V_);
    Vec hv = Tmul(wB) + nmul(q0.cwiseProduct(wB));
    hv(0) += (qgh_bare_ / 12.0) * beta_ * wB(0);
    return wB.dot(hv) / wB.dot(Bmul(wB));
  }

  // Pair energy sum_{i<j} (J_ij - K_ij) over physical columns.
  double pair_energy(const Mat& W) const {
    const int M = g_.M;
    const int N = static_cast<int>(W.cols());
    double epair = 0.0;
    std::vector<Vec> hart(static_cast<size_t>(N));
    for (int j = 0; j < N; ++j) {
      Vec wj2 = W.col(j).cwiseProduct(W.col(j));
      hart[static_cast<size_t>(j)] = coulomb(wj2);
    }
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        if (i == j) continue;
        Vec wi2 = W.col(i).cwiseProduct(W.col(i));
        double Jij = (wi2.cwiseProduct(hart[static_cast<size_t>(j)]).cwiseProduct(g_.R2)).sum() * g_.dx;
        Vec gz = W.col(i).cwiseProduct(W.col(j)).cwiseProduct(g_.R2);
        Vec Wij(M);
        double pref = 0.0;
        for (int k = 0; k < M; ++k) {
          pref += gz(k) * g_.dx;
          Wij(k) = pref / g_.r(k);
        }
        double suf = 0.0;
        for (int k = M - 1; k >= 0; --k) {
          suf += gz(k) * g_.dx / g_.r(k);
          Wij(k) += suf - gz(k) * g_.dx / g_.r(k);
        }
        double Kij =
            (W.col(i).cwiseProduct(W.col(j)).cwiseProduct(Wij).cwiseProduct(g_.R2)).sum() * g_.dx;
        epair += 0.5 * (Jij - Kij);
      }
    return epair;
  }

  RadialSolution scf(const RadialOptions& opt = RadialOptions()) const {
    const int M = g_.M;
    Vec Rhart = Vec::Zero(M);
    ExchangeHistory xh;
    double E_old = std::numeric_limits<double>::quiet_NaN();
    Mat W;
    Vec eps;
    std::vector<Vec> sub0;
    RadialSolution sol;
    sol.grid = g_;
    sol.Z = Z_;
    sol.N = N_;
    for (int it = 0; it < opt.max_iter; ++it) {
      Mat Wn;
      Vec epsn;
      solve_fock(Rhart, xh, N_, sub0, epsn, Wn);
      Vec Rh_new = Vec::Zero(M);
      for (int j = 0; j < N_; ++j) Rh_new += coulomb(Wn.col(j).cwiseProduct(Wn.col(j)));
      if (it == 0) {
        Rhart = Rh_new;
        xh.clear();
        xh.push_back({1.0, Wn});
      } else {
        Rhart = (1.0 - opt.damping) * Rh_new + opt.damping * Rhart;
        for (ExchangeSet& s : xh) s.weight *= opt.damping;
        xh.push_back({1.0 - opt.damping, Wn});
        double total = 0.0;
        for (const ExchangeSet& s : xh) total += s.weight;
        ExchangeHistory pruned;
        for (ExchangeSet& s : xh)
          if (s.weight >= 1e-15 * total) pruned.push_back(std::move(s));
        xh = std::move(pruned);
      }
      W = Wn;
      eps = epsn;
      double E1 = 0.0;
      double sdx = std::sqrt(g_.dx);
      for (int j = 0; j < N_; ++j) E1 += bare_h_expectation(W.col(j) * sdx);
      double E = E1 + pair_energy(W);
      sol.iterations = it + 1;
      sol.E = E;
      sol.eps = eps;
      sol.W = W;
      if (std::isfinite(E_old) && std::abs(E - E_old) < opt.tol_energy) {
        sol.converged = true;
        return sol;
      }
      E_old = E;
      sub0.clear();
      for (int j = 0; j < N_; ++j) sub0.push_back(W.col(j) * sdx);
    }
    sol.converged = false;
    return sol;
  }

  // Cross potential W_ij(r) = sum_l u_i u_j dr / max(r, r_l) evaluated with
  // the orthonormality substitution: the interior prefix integral is replaced
  // by (delta_ij - suffix), which is exact in the continuum and immune to the
  // accumulated eigen-noise that a literal prefix sum would integrate up.
  Vec cross_pot_tail(const Vec& wi, const Vec& wj, bool diag) const {
    const int M = g_.M;
    Vec m = wi.cwiseProduct(wj).cwiseProduct(g_.R2) * g_.dx;
    Vec sufm(M), sufr(M);
    double am = 0.0, ar = 0.0;
    for (int k = M - 1; k >= 0; --k) {
      sufm(k) = am;  // strict suffix: sum_{l > k}
      sufr(k) = ar;
      am += m(k);
      ar += m(k) / g_.r(k);
    }
    Vec out(M);
    for (int k = 0; k < M; ++k) out(k) = ((diag ? 1.0 : 0.0) - sufm(k)) / g_.r(k) + sufr(k);
    return out;
  }

  // Tail reconstruction: beyond the end of the trusted region, each orbital
  // is re-solved from the self-exchange-corrected local operator with the
  // cross-exchange source on the right-hand side, weakest-bound orbital
  // first.  Two passes; the first zeroes source components below their own
  // noise floor so pass one cannot inject another orbital's eigen-noise.
  //
  // The splice point ends the contiguous run outward from the peak of |u|
  // whose 17-node look-ahead window max stays >= 1e-3 max|u|.  Two failure
  // modes drive that rule.  The threshold must sit far above the
  // eigensolver noise floor (~1e-6 max|u| for a 1e-9 residual): the
  // reconstructed tail inherits the boundary value's relative error
  // wholesale, and tail-weighted integrals are only grid-stable when that
  // error is well below 1%.  And the run must be contiguous: an isolated
  // noise excursion above threshold far out would otherwise drag the splice
  // point into the noise floor, keeping the noise instead of replacing it.
  // The look-ahead window bridges interior sign changes of u, where single
  // nodes dip below threshold.  Past the splice the solved BVP *is* the
  // converged orbital equation at eps_i, so replacing a generous stretch of
  // the eigenvector with its solution only removes noise.
  Mat polish(const Mat& W0, const Vec& eps, int passes = 2) const {
    const int M = g_.M;
    const int N = static_cast<int>(W0.cols());
    const double idx2 = 1.0 / (g_.dx * g_.dx);
    Mat Wp = W0;
    std::vector<int> order(static_cast<size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return eps(a) > eps(b); });
    for (int ip = 0; ip < passes; ++ip) {
      for (int oi = 0; oi < N; ++oi) {
        int i = order[static_cast<size_t>(oi)];
        Vec w = Wp.col(i);
        Vec u = w.cwiseAbs().cwiseProduct(g_.r.cwiseSqrt());
        double umax = u.maxCoeff();
        const double thr = 1e-3 * umax;
        int peak = 0;
        u.maxCoeff(&peak);
        int km = peak;
        while (km < M - 1) {
          double wmax = 0.0;
          for (int k = km; k < std::min(M, km + 17); ++k) wmax = std::max(wmax, u(k));
          if (wmax < thr) break;
          ++km;
        }
        --km;
        km = std::min(km, M - 10);
        int n1 = M - 1 - km;
        if (n1 < 5) continue;
        Vec Rhart = Vec::Zero(M);
        for (int j = 0; j < N; ++j) Rhart += coulomb(Wp.col(j).cwiseProduct(Wp.col(j)));
        Vec Wii = cross_pot_tail(w, w, true);
        Vec q = Vec::Constant(M, 0.25) + g_.R2.cwiseProduct(V_ + Rhart - Wii);
        Vec ysrc = Vec::Zero(M);
        for (int j = 0; j < N; ++j) {
          if (j == i) continue;
          Vec wj = Wp.col(j);
          if (ip == 0) {
            Vec uj = wj.cwiseAbs().cwiseProduct(g_.r.cwiseSqrt());
            double ujmax = uj.maxCoeff();
            for (int k = 0; k < M; ++k)
              if (uj(k) < 1e-8 * ujmax) wj(k) = 0.0;
          }
          ysrc += wj.cwiseProduct(cross_pot_tail(w, wj, false)).cwiseProduct(g_.R2);
        }
        Vec y = nmul(ysrc);
        auto off = [&](int k) { return -idx2 + q(k) / 12.0 - eps(i) * g_.R2(k) / 12.0; };
        Vec dl(n1 - 1), dmain(n1), du(n1 - 1), rhs(n1);
        for (int tpos = 0; tpos < n1; ++tpos) {
          int k = km + 1 + tpos;
          dmain(tpos) = 2.0 * idx2 + 10.0 * q(k) / 12.0 - eps(i) * 10.0 * g_.R2(k) / 12.0;
          rhs(tpos) = y(k);
          if (tpos + 1 < n1) {
            dl(tpos) = off(km + 1 + tpos);  // A(tpos+1, tpos)
            du(tpos) = off(km + 2 + tpos);  // A(tpos, tpos+1)
          }
        }
        rhs(0) -= off(km) * w(km);
        TriLU lu(dl, dmain, du);
        Vec tail = lu.solve(rhs);
        for (int tpos = 0; tpos < n1; ++tpos) Wp(km + 1 + tpos, i) = tail(tpos);
      }
    }
    return Wp;
  }

  // Plain Gram-Schmidt in the trapezoid metric sum(a b r^2 dx), ascending-eps
  // order: each orbital only receives faster-decaying admixtures, so its own
  // far-tail asymptotics survive while the Gram matrix becomes exact.
  void orthonormalize(Mat& W) const {
    for (int i = 0; i < W.cols(); ++i) {
      for (int j = 0; j < i; ++j) {
        double ov = (W.col(i).cwiseProduct(W.col(j)).cwiseProduct(g_.R2)).sum() * g_.dx;
        W.col(i) -= ov * W.col(j);
      }
      double nrm =
          std::sqrt((W.col(i).cwiseProduct(W.col(i)).cwiseProduct(g_.R2)).sum() * g_.dx);
      W.col(i) /= nrm;
    }
  }

  double Z() const { return Z_; }
  int N() const { return N_; }

 private:
  double Z_;
  int N_;
  RadialGrid g_;
  Vec V_;
  double beta_ = 0.0, rgh_ = 0.0, qgh_bare_ = 0.0;
};

// Full pipeline: SCF, tail polish, orthonormalization, boundary check.
inline RadialSolution solve_radial(double Z, int N, const RadialGrid& grid,
                                   const RadialOptions& opt = RadialOptions()) {
  RadialSolver solver(Z, N, grid);
  RadialSolution sol = solver.scf(opt);
  if (!sol.converged) return sol;
  sol.W = solver.polish(sol.W, sol.eps);
  solver.orthonormalize(sol.W);
  for (int j = 0; j < N; ++j) {
    Vec u = sol.W.col(j).cwiseAbs().cwiseProduct(grid.r.cwiseSqrt());
    if (u(grid.M - 1) > 1e-10 * u.maxCoeff())
      throw RadialError("grid too small: orbital amplitude at r_max above 1e-10 of its peak");
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Measurements on a converged solution.
// ---------------------------------------------------------------------------

// Least-squares slope of log|u| over [rlo, rhi], fitted past the last sign
// change and above the underflow floor.
inline double fit_slope(const Vec& r, const Vec& u, double rlo, double rhi) {
  std::vector<double> rr, uu;
  double umax = u.cwiseAbs().maxCoeff();
  for (int k = 0; k < r.size(); ++k)
    if (r(k) >= rlo && r(k) <= rhi && std::abs(u(k)) > 1e-250 * umax) {
      rr.push_back(r(k));
      uu.push_back(u(k));
    }
  int last_change = -1;
  for (size_t k = 0; k + 1 < uu.size(); ++k)
    if (uu[k] * uu[k + 1] < 0.0) last_change = static_cast<int>(k);
  if (last_change >= 0) {
    rr.erase(rr.begin(), rr.begin() + last_change + 1);
    uu.erase(uu.begin(), uu.begin() + last_change + 1);
  }
  if (rr.size() < 2) throw RadialError("slope fit: window has fewer than two usable nodes");
  // least squares on (r, 1) vs log|u|
  double sw = static_cast<double>(rr.size()), sr = 0, srr = 0, sl = 0, srl = 0;
  for (size_t k = 0; k < rr.size(); ++k) {
    double L = std::log(std::abs(uu[k]));
    sr += rr[k];
    srr += rr[k] * rr[k];
    sl += L;
    srl += rr[k] * L;
  }
  return (sw * srl - sr * sl) / (sw * srr - sr * sr);
}

struct DecayReport {
  Vec slopes;          // per orbital
  double threshold;    // -sqrt(0.9 min(-eps)) + 0.02
  bool all_within = false;
};

inline DecayReport decay_fit(const RadialSolution& sol, double rlo, double rhi) {
  DecayReport rep;
  int N = sol.N;
  rep.slopes.resize(N);
  for (int i = 0; i < N; ++i) {
    Vec u = sol.W.col(i).cwiseProduct(sol.grid.r.cwiseSqrt());
    rep.slopes(i) = fit_slope(sol.grid.r, u, rlo, rhi);
  }
  double mn = (-sol.eps.array()).minCoeff();
  rep.threshold = -std::sqrt(0.9 * mn) + 0.02;
  rep.all_within = (rep.slopes.array() <= rep.threshold).all();
  return rep;
}

struct WeightedNormReport {
  double value = 0.0;          // sum_i integral exp(2 sqrt(etilde) r) u_i^2 dr
  double etilde = 0.0;
  int tail_violations = 0;     // non-decreasing increments past 0.9 rmax
  bool finite = false;
};

// Lemma-shaped weighted tail norm with the per-node increment profile: the
// increments must decay monotonically on the outer radius window, which is
// the discrete statement that the weighted integral converges.
inline WeightedNormReport weighted_tail_norm(const RadialSolution& sol, double etilde) {
  WeightedNormReport rep;
  rep.etilde = etilde;
  const RadialGrid& g = sol.grid;
  Vec inc = Vec::Zero(g.M);
  for (int i = 0; i < sol.N; ++i)
    for (int k = 0; k < g.M; ++k) {
      double u = std::abs(sol.W(k, i)) * std::sqrt(g.r(k));
      double li = 2.0 * std::sqrt(etilde) * g.r(k) + 2.0 * std::log(std::max(u, 1e-300));
      inc(k) += std::exp(li) * g.dx * g.r(k);
    }
  rep.value = inc.sum();
  rep.finite = std::isfinite(rep.value);
  double r_window = 0.9 * g.rmax;
  for (int k = 0; k + 1 < g.M; ++k)
    if (g.r(k) >= r_window && inc(k + 1) >= inc(k)) ++rep.tail_violations;
  return rep;
}

struct FarfieldReport {
  double qii_max_dev = 0.0;    // max over i, r >= 20 of |r Q_ii - 1|
  double qii_max_value = 0.0;  // max r Q_ii anywhere (Newton: <= 1)
  bool qii_monotone = true;    // r Q_ii nondecreasing on the tail
  double min_margin = 0.0;     // bound (b), min over pairs and tail nodes
  double offdiag_rq_max = 0.0; // max over i<j, r >= 20 of |r Q_ij|
};

// Far-field checks on the pair potentials Q_ij(r) = int u_i u_j / max(r,s) ds.
// (a) Newton: r Q_ii climbs to 1 from below; (b) the two-region split bounds
// |Q_ij| by 2/r plus a Cauchy-Schwarz tail term built from the mass outside
// r/2.
inline FarfieldReport farfield_q_check(const RadialSolution& sol, double r_tail = 20.0) {
  const RadialGrid& g = sol.grid;
  const int N = sol.N;
  FarfieldReport rep;
  RadialSolver solver(sol.Z, sol.N, g);

  // u columns and their squared-tail mass suffix
  Mat U(g.M, N);
  for (int i = 0; i < N; ++i) U.col(i) = sol.W.col(i).cwiseProduct(g.r.cwiseSqrt());

  rep.min_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    Vec Qii = solver.cross_pot_tail(sol.W.col(i), sol.W.col(i), true);
    double prev = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < g.M; ++k) {
      double rq = g.r(k) * Qii(k);
      rep.qii_max_value = std::max(rep.qii_max_value, rq);
      if (g.r(k) >= r_tail) {
        rep.qii_max_dev = std::max(rep.qii_max_dev, std::abs(rq - 1.0));
        if (rq < prev - 1e-12) rep.qii_monotone = false;
        prev = rq;
      }
    }
  }

  // bound (b) on every ordered pair, diagonal included
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      Vec Qij = solver.cross_pot_tail(sol.W.col(i), sol.W.col(j), i == j);
      if (i < j) {
        for (int k = 0; k < g.M; ++k)
          if (g.r(k) >= r_tail)
            rep.offdiag_rq_max = std::max(rep.offdiag_rq_max, std::abs(g.r(k) * Qij(k)));
      }
      for (int k = 0; k < g.M; ++k) {
        double r = g.r(k);
        if (r < r_tail) continue;
        // tail mass of orbital j outside r/2
        double tm2 = 0.0;
        for (int l = 0; l < g.M; ++l)
          if (g.r(l) >= 0.5 * r) tm2 += U(l, j) * U(l, j) * g.r(l) * g.dx;
        // Cauchy-Schwarz factor of orbital i against 1/|x-y| outside r/2:
        // angular average of |x-y|^-2 is ln((r+s)/|r-s|)/(2 r s)
        double cs2 = 0.0;
        for (int l = 0; l < g.M; ++l) {
          double s = g.r(l);
          if (s < 0.5 * r) continue;
          double w2 = U(l, i) * U(l, i) * s * g.dx;
          if (l == k) {
            double delta = 0.5 * r * g.dx;
            cs2 += U(l, i) * U(l, i) / (2.0 * r * r) * 2.0 * delta *
                   (std::log(2.0 * r / delta) + 1.0);
          } else {
            cs2 += w2 * std::log((r + s) / std::abs(r - s)) / (2.0 * r * s);
          }
        }
        double bound = 2.0 / r + std::sqrt(cs2) * std::sqrt(tm2);
        rep.min_margin = std::min(rep.min_margin, bound - std::abs(Qij(k)));
      }
    }
  return rep;
}

// Discrete |Delta phi_i| via the radial equation: u'' is evaluated from the
// converged potentials rather than finite differences, then |Delta phi|^2 =
// int (u'')^2 dr under the normalization int u^2 dr = 1.
inline Vec h2norm_report(const RadialSolution& sol) {
  const RadialGrid& g = sol.grid;
  const int N = sol.N;
  RadialSolver solver(sol.Z, sol.N, g);
  Vec out(N);
  std::vector<Vec> hart(static_cast<size_t>(N));
  for (int j = 0; j < N; ++j)
    hart[static_cast<size_t>(j)] = solver.coulomb(sol.W.col(j).cwiseProduct(sol.W.col(j)));
  for (int i = 0; i < N; ++i) {
    Vec Ri = Vec::Zero(g.M);
    for (int j = 0; j < N; ++j)
      if (j != i) Ri += hart[static_cast<size_t>(j)];
    Vec ui = sol.W.col(i).cwiseProduct(g.r.cwiseSqrt());
    Vec upp = Vec::Zero(g.M);
    for (int k = 0; k < g.M; ++k)
      upp(k) = (-sol.Z / g.r(k) + Ri(k) - sol.eps(i)) * ui(k);
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      Vec Wij = solver.cross_pot_tail(sol.W.col(i), sol.W.col(j), false);
      Vec uj = sol.W.col(j).cwiseProduct(g.r.cwiseSqrt());
      upp -= Wij.cwiseProduct(uj);
    }
    double acc = 0.0;
    for (int k = 0; k < g.M; ++k) acc += upp(k) * upp(k) * g.r(k) * g.dx;
    out(i) = std::sqrt(acc);
  }
  return out;
}

// <V> and <-Delta> for single-orbital runs (virial sanity: <V> = 2E, <-Delta> = -E).
struct VirialReport {
  double v_expect = 0.0;
  double t_expect = 0.0;
};

inline VirialReport virial_report(const RadialSolution& sol) {
  const RadialGrid& g = sol.grid;
  VirialReport rep;
  Vec u0 = sol.W.col(0).cwiseProduct(g.r.cwiseSqrt());
  double vexp = 0.0;
  for (int k = 0; k < g.M; ++k) vexp += -sol.Z / g.r(k) * u0(k) * u0(k) * g.r(k) * g.dx;
  rep.v_expect = vexp;
  rep.t_expect = sol.eps(0) - vexp;
  return rep;
}

// Max trapezoid-Gram deviation from identity.
inline double gram_deviation(const RadialSolution& sol) {
  const RadialGrid& g = sol.grid;
  double worst = 0.0;
  for (int i = 0; i < sol.N; ++i)
    for (int j = 0; j < sol.N; ++j) {
      double ov = (sol.W.col(i).cwiseProduct(sol.W.col(j)).cwiseProduct(g.R2)).sum() * g.dx;
      worst = std::max(worst, std::abs(ov - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

}  // namespace hflab
