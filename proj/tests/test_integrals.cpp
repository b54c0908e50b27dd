#include <catch2/catch_amalgamated.hpp>

#include <hflab/integrals.hpp>
#include <hflab/molbasis.hpp>
#include <hflab/util.hpp>

#include <cmath>
#include <sstream>

#include "oracles.hpp"

using namespace hflab;
using namespace hflab::md;
using oracle::A3;

namespace {

double norm_s(double a) { return std::pow(2.0 * a / M_PI, 0.75); }

IntegralTables tables_for(const std::string& doc) {
  ParsedInput in = parse_input(doc);
  return build_tables(in.mol, in.basis);
}

const char* he_doc = "{\"atoms\":[{\"Z\":2,\"position\":[0,0,0]}],\"n_electrons\":2,"
                     "\"basis\":\"even-tempered(0.015,3,8)\"}";
const char* h2_doc = "{\"atoms\":[{\"Z\":1,\"position\":[0,0,-1.4]},{\"Z\":1,\"position\":[0,0,1.4]}],"
                     "\"n_electrons\":2,\"basis\":\"sto3g-paper\"}";
const char* be_doc = "{\"atoms\":[{\"Z\":4,\"position\":[0,0,0]}],\"n_electrons\":3,"
                     "\"basis\":\"sto3g-paper\"}";

}  // namespace

TEST_CASE("Boys function against quadrature across both evaluation branches", "[integrals]") {
  for (int m = 0; m <= boys_max_m; ++m) {
    for (double x : {0.0, 1e-8, 0.05, 0.25, 1.0, 2.5, 7.0, 12.5, 20.0, 30.0, 34.9, 35.1, 40.0,
                     80.0, 200.0}) {
      double got = boys(m, x);
      double want = oracle::boys(m, x);
      INFO("m=" << m << " x=" << x);
      // absolute floor at the oracle quadrature tolerance
      REQUIRE(got == Catch::Approx(want).epsilon(1e-12).margin(1e-15));
    }
  }
}

TEST_CASE("Boys anchors frozen from extended-precision quadrature", "[integrals]") {
  REQUIRE(boys(0, 1.0) == Catch::Approx(oracle::F0_AT_1).epsilon(1e-14));
  REQUIRE(boys(1, 0.25) == Catch::Approx(oracle::F1_AT_QUARTER).epsilon(1e-14));
  REQUIRE(boys(3, 2.5) == Catch::Approx(oracle::F3_AT_2P5).epsilon(1e-14));
  // x = 35 sits on the series/asymptotic boundary, the weakest point of either
  REQUIRE(boys(2, 35.0) == Catch::Approx(oracle::F2_AT_35).epsilon(5e-13));
  // the large-x branch drops the exp(-x) tail, costing ~1e-11 relative by m=6
  // (absolute error ~6e-20, far below anything the integrals can resolve)
  REQUIRE(boys(6, 40.0) == Catch::Approx(oracle::F6_AT_40).epsilon(5e-11));
  REQUIRE(boys(4, 12.5) == Catch::Approx(oracle::F4_AT_12P5).epsilon(1e-13));
  REQUIRE(boys(0, 0.0) == 1.0);
}

TEST_CASE("primitive overlap and kinetic match Gauss-Hermite sums", "[integrals]") {
  Rng rng(20240817u);
  for (int trial = 0; trial < 40; ++trial) {
    A3 A = {rng.next_uniform() - 0.5, rng.next_uniform() - 0.5, rng.next_uniform() - 0.5};
    A3 B = {rng.next_uniform() - 0.5, rng.next_uniform() - 0.5, rng.next_uniform() - 0.5};
    double a = 0.1 * std::pow(50.0, rng.next_uniform());
    double b = 0.1 * std::pow(50.0, rng.next_uniform());
    std::array<int, 3> pa = {0, 0, 0}, pb = {0, 0, 0};
    if (trial % 4 == 1 || trial % 4 == 3) pa[trial % 3] = 1;
    if (trial % 4 >= 2) pb[(trial + 1) % 3] = 1;

    oracle::CartPrim u{a, A, pa}, v{b, B, pb};
    double s_got = prim_overlap(A, pa, a, B, pb, b);
    double s_want = oracle::gh_overlap(u, v);
    REQUIRE(s_got == Catch::Approx(s_want).epsilon(1e-12).margin(1e-15));

    double t_got = prim_kinetic(A, pa, a, B, pb, b);
    double t_want = oracle::gh_kinetic(u, v);
    REQUIRE(t_got == Catch::Approx(t_want).epsilon(1e-11).margin(1e-14));
  }
}

TEST_CASE("s-pair integrals match closed forms and frozen anchors", "[integrals]") {
  A3 A = {0.1, -0.2, 0.3}, B = {-0.4, 0.25, -0.15}, C = {0.05, 0.1, -0.3};
  double a = 0.7, b = 0.31;
  std::array<int, 3> s0 = {0, 0, 0};
  double nn = norm_s(a) * norm_s(b);

  double S = nn * prim_overlap(A, s0, a, B, s0, b);
  REQUIRE(S == Catch::Approx(oracle::SS_OVERLAP_ANCHOR).epsilon(1e-14));
  REQUIRE(S == Catch::Approx(nn * oracle::overlap_ss(a, A, b, B)).epsilon(1e-14));

  double T = nn * prim_kinetic(A, s0, a, B, s0, b);
  REQUIRE(T == Catch::Approx(oracle::SS_KINETIC_ANCHOR).epsilon(1e-14));
  REQUIRE(T == Catch::Approx(nn * oracle::kinetic_ss(a, A, b, B)).epsilon(1e-14));

  Molecule mol;
  mol.atoms.push_back({1.0, C});
  mol.n_electrons = 1;
  double V = nn * prim_nuclear(A, s0, a, B, s0, b, mol);
  REQUIRE(V == Catch::Approx(oracle::SS_NUCLEAR_ANCHOR).epsilon(1e-13));
  REQUIRE(V == Catch::Approx(nn * oracle::nuclear_ss(a, A, b, B, C)).epsilon(1e-12));

  A3 Cc = {0.0, 0.2, 0.1}, D = {0.3, -0.1, 0.25};
  double c = 1.3, d = 0.45;
  double n4 = nn * norm_s(c) * norm_s(d);
  double eri = n4 * prim_eri(A, s0, a, B, s0, b, Cc, s0, c, D, s0, d);
  REQUIRE(eri == Catch::Approx(oracle::SSSS_ERI_ANCHOR).epsilon(1e-13));
  REQUIRE(eri ==
          Catch::Approx(n4 * oracle::eri_ssss(a, A, b, B, c, Cc, d, D)).epsilon(1e-12));
}

TEST_CASE("p-function integrals match center derivatives of the s closed forms", "[integrals]") {
  // d/dAx of an s primitive equals 2a times the p_x primitive, so every
  // p-containing integral is a center derivative of the s-s closed form.
  A3 A = {0.15, -0.1, 0.2}, B = {-0.3, 0.2, -0.1}, C = {0.1, 0.05, -0.2};
  double a = 0.9, b = 0.4;
  std::array<int, 3> s0 = {0, 0, 0};

  for (int axis = 0; axis < 3; ++axis) {
    std::array<int, 3> px = {0, 0, 0};
    px[axis] = 1;

    double want_s = oracle::center_derivative(
                        [&](const A3& Ax) { return oracle::overlap_ss(a, Ax, b, B); }, A, axis) /
                    (2.0 * a);
    REQUIRE(prim_overlap(A, px, a, B, s0, b) == Catch::Approx(want_s).margin(1e-9));

    Molecule mol;
    mol.atoms.push_back({1.0, C});
    mol.n_electrons = 1;
    double want_v = oracle::center_derivative(
                        [&](const A3& Ax) { return oracle::nuclear_ss(a, Ax, b, B, C); }, A, axis) /
                    (2.0 * a);
    REQUIRE(prim_nuclear(A, px, a, B, s0, b, mol) == Catch::Approx(want_v).margin(1e-9));

    A3 Cc = {0.05, 0.15, 0.0}, D = {0.25, -0.05, 0.2};
    double c = 1.1, d = 0.5;
    double want_e = oracle::center_derivative(
                        [&](const A3& Ax) { return oracle::eri_ssss(a, Ax, b, B, c, Cc, d, D); },
                        A, axis) /
                    (2.0 * a);
    REQUIRE(prim_eri(A, px, a, B, s0, b, Cc, s0, c, D, s0, d) ==
            Catch::Approx(want_e).margin(1e-8));
  }
}

TEST_CASE("assembled tables have the contracted structure", "[integrals]") {
  IntegralTables t = tables_for(be_doc);
  REQUIRE(t.n == 5);
  REQUIRE(t.l_max == 1);

  // unit diagonal: shells are normalized, including the p functions
  for (int i = 0; i < t.n; ++i) REQUIRE(t.S(i, i) == Catch::Approx(1.0).epsilon(1e-12));

  REQUIRE((t.S - t.S.transpose()).norm() == 0.0);
  REQUIRE((t.T - t.T.transpose()).norm() == 0.0);
  REQUIRE((t.Vnuc - t.Vnuc.transpose()).norm() == 0.0);
  REQUIRE((t.hcore - (t.T + t.Vnuc)).norm() < 1e-15);

  // overlap spectrum: cond_S agrees with an independent Jacobi eigensolve
  oracle::Vec ev = oracle::jacobi_eigenvalues(t.S);
  REQUIRE(t.s_min == Catch::Approx(ev(0)).epsilon(1e-10));
  REQUIRE(t.s_max == Catch::Approx(ev(t.n - 1)).epsilon(1e-10));
  REQUIRE(t.cond_S == Catch::Approx(ev(t.n - 1) / ev(0)).epsilon(1e-9));
  REQUIRE(ev(0) > 0.0);
}

TEST_CASE("two-body tensor has the full eightfold symmetry", "[integrals]") {
  IntegralTables t = tables_for(he_doc);
  Rng rng(7u);
  for (int trial = 0; trial < 200; ++trial) {
    int i = static_cast<int>(rng.next_u64() % t.n);
    int j = static_cast<int>(rng.next_u64() % t.n);
    int k = static_cast<int>(rng.next_u64() % t.n);
    int l = static_cast<int>(rng.next_u64() % t.n);
    double v = t.eri(i, j, k, l);
    REQUIRE(v == t.eri(j, i, k, l));
    REQUIRE(v == t.eri(i, j, l, k));
    REQUIRE(v == t.eri(k, l, i, j));
    REQUIRE(v == t.eri(l, k, j, i));
  }
  for (int i = 0; i < t.n; ++i) REQUIRE(t.eri(i, i, i, i) > 0.0);
}

TEST_CASE("nuclear repulsion of the two-proton system", "[integrals]") {
  IntegralTables t = tables_for(h2_doc);
  REQUIRE(t.enuc == Catch::Approx(1.0 / 2.8).epsilon(1e-15));
  IntegralTables atom = tables_for(he_doc);
  REQUIRE(atom.enuc == 0.0);
}

TEST_CASE("quadrupled exponents carry the standard-unit spectrum", "[integrals]") {
  // Rescaling paper -> standard multiplies exponents by 4.  On the rescaled
  // basis (atom at the origin) the blocks scale as T' = 4T, V' = 2V with S
  // unchanged, so the standard-convention operator T'/2 + V' = 2(T + V) has
  // exactly doubled eigenvalues -- the unit-convention energy ratio.
  ParsedInput in = parse_input(he_doc);
  IntegralTables t1 = build_tables(in.mol, in.basis);
  BasisSet scaled = rescale_convention(in.basis, Convention::paper, Convention::standard);
  IntegralTables t2 = build_tables(in.mol, scaled);
  REQUIRE((t2.S - t1.S).cwiseAbs().maxCoeff() < 1e-14);
  REQUIRE((t2.T - 4.0 * t1.T).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((t2.Vnuc - 2.0 * t1.Vnuc).cwiseAbs().maxCoeff() < 1e-13);
  oracle::Vec e1 = oracle::jacobi_generalized(t1.hcore, t1.S);
  oracle::Vec e2 = oracle::jacobi_generalized(0.5 * t2.T + t2.Vnuc, t2.S);
  for (int i = 0; i < t1.n; ++i)
    REQUIRE(e2(i) == Catch::Approx(2.0 * e1(i)).epsilon(1e-11).margin(1e-12));
}

TEST_CASE("binary dump round trip is bit exact", "[integrals]") {
  IntegralTables t = tables_for(h2_doc);
  std::ostringstream os(std::ios::binary);
  dump_tables(t, os);
  std::string blob = os.str();

  std::istringstream is(blob, std::ios::binary);
  IntegralTables u = load_tables(is);
  REQUIRE(u.n == t.n);
  REQUIRE(u.l_max == t.l_max);
  REQUIRE((u.S - t.S).norm() == 0.0);
  REQUIRE((u.T - t.T).norm() == 0.0);
  REQUIRE((u.Vnuc - t.Vnuc).norm() == 0.0);
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j)
      for (int k = 0; k < t.n; ++k)
        for (int l = 0; l < t.n; ++l) REQUIRE(u.eri(i, j, k, l) == t.eri(i, j, k, l));

  // corrupted magic and truncation both fail loudly
  std::string bad = blob;
  bad[0] ^= 0x5a;
  std::istringstream bs(bad, std::ios::binary);
  REQUIRE_THROWS_AS(load_tables(bs), ParseError);
  std::istringstream ts(blob.substr(0, blob.size() / 2), std::ios::binary);
  REQUIRE_THROWS_AS(load_tables(ts), ParseError);
}
