#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hflab/util.hpp"

namespace hflab {

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Unit conventions for Gaussian exponents.  "paper" is the native system of
// the whole library: the kinetic operator is -Delta, hydrogenic levels sit at
// -Z^2/(4 n^2), and energies are half their standard-Hartree counterparts.
// "standard" tags exponents transcribed from conventional (-1/2 Delta)
// tables; the dilation x -> x/2 maps between the two, which on Gaussians is
// exactly a factor 4 on every exponent.
enum class Convention { paper, standard };

inline std::string convention_name(Convention c) {
  return c == Convention::paper ? "paper" : "standard";
}

inline Convention parse_convention(const std::string& s) {
  if (s == "paper") return Convention::paper;
  if (s == "standard") return Convention::standard;
  throw ParseError("unknown convention tag: " + s);
}

struct Atom {
  double Z = 0.0;
  std::array<double, 3> pos{0.0, 0.0, 0.0};
};

struct Molecule {
  std::vector<Atom> atoms;
  int n_electrons = 0;
};

// One contracted shell.  `coeffs` are contraction weights in the
// normalized-primitive convention (each weight multiplies a unit-norm
// primitive).  That representation makes convention rescaling exact: scaling
// all exponents by a common factor leaves every primitive-pair overlap ratio,
// and hence the weights, untouched.
struct Shell {
  int center = 0;  // atom index
  int l = 0;       // 0 (s) or 1 (p); higher momenta are out of scope
  std::vector<double> exps;
  std::vector<double> coeffs;
};

struct BasisSet {
  std::vector<Shell> shells;

  int n_functions() const {
    int n = 0;
    for (const auto& s : shells) n += (s.l == 0) ? 1 : 3;
    return n;
  }
  int max_l() const {
    int l = 0;
    for (const auto& s : shells) l = std::max(l, s.l);
    return l;
  }
};

// Per-run knobs carried by the input document; CLI flags override.
struct RunOptions {
  int max_iter = 500;
  double tol_energy = 1e-10;
  double tol_commutator = 1e-8;
  double damping = 0.0;
  double degeneracy_tol = 1e-9;
  std::uint64_t seed = 0;
  std::string guess = "core";  // "core" | "random"
};

struct ParsedInput {
  Molecule mol;
  BasisSet basis;
  RunOptions options;
  Convention file_convention = Convention::paper;
  std::string basis_name;  // name string, or "explicit"
};

// --- primitive norms and self-overlaps --------------------------------------

// L2 norm of the bare primitive x^l exp(-a r^2) (one Cartesian component).
inline double primitive_norm(double a, int l) {
  double n = std::pow(2.0 * a / M_PI, 0.75);
  if (l == 1) n *= 2.0 * std::sqrt(a);
  return n;
}

// Overlap of two unit-norm primitives on one center, same Cartesian component.
inline double normalized_primitive_overlap(double a, double b, int l) {
  double p = a + b;
  double s = std::pow(M_PI / p, 1.5);
  if (l == 1) s /= 2.0 * p;
  return s * primitive_norm(a, l) * primitive_norm(b, l);
}

inline double shell_self_overlap(const Shell& s) {
  double acc = 0.0;
  for (size_t k = 0; k < s.exps.size(); ++k)
    for (size_t m = 0; m < s.exps.size(); ++m)
      acc += s.coeffs[k] * s.coeffs[m] *
             normalized_primitive_overlap(s.exps[k], s.exps[m], s.l);
  return acc;
}

// Raw polynomial-Gaussian coefficients (what the integral code contracts).
inline std::vector<double> raw_coefficients(const Shell& s) {
  std::vector<double> c(s.exps.size());
  for (size_t k = 0; k < c.size(); ++k)
    c[k] = s.coeffs[k] * primitive_norm(s.exps[k], s.l);
  return c;
}

// --- shell validation and normalization -------------------------------------

inline void validate_shell(const Shell& s, int n_atoms) {
  if (s.center < 0 || s.center >= n_atoms) throw ParseError("shell center index out of range");
  if (s.l < 0 || s.l > 1) throw ParseError("angular momentum must be 0 or 1");
  if (s.exps.empty()) throw ParseError("shell needs at least one primitive");
  if (s.exps.size() != s.coeffs.size()) throw ParseError("exponent/coefficient count mismatch");
  for (size_t k = 0; k < s.exps.size(); ++k) {
    if (!(s.exps[k] > 0.0)) throw ParseError("exponents must be strictly positive");
    if (k > 0 && !(s.exps[k] < s.exps[k - 1]))
      throw ParseError("exponents must be strictly decreasing within a shell");
  }
}

inline BasisSet normalize_shells(BasisSet basis) {
  for (auto& s : basis.shells) {
    for (double a : s.exps)
      if (!(a > 0.0)) throw ParseError("exponents must be strictly positive");
    double sigma = shell_self_overlap(s);
    if (!(sigma > 0.0)) throw ParseError("degenerate contraction: non-positive self-overlap");
    double inv = 1.0 / std::sqrt(sigma);
    for (auto& c : s.coeffs) c *= inv;
  }
  return basis;
}

// Exponent rescaling between unit conventions; exact by construction
// (multiplication by 4 or 1/4, weights untouched).
inline BasisSet rescale_convention(BasisSet basis, Convention from, Convention to) {
  if (from == to) return basis;
  const double f = (from == Convention::standard) ? 0.25 : 4.0;
  for (auto& s : basis.shells)
    for (auto& a : s.exps) a *= f;
  return basis;
}

// --- built-in bases ----------------------------------------------------------

namespace sto3g {

// Standard STO-3G exponents, H through Ne.  1s triple per element; elements
// with a second period carry an additional sp set shared by 2s and 2p.
struct ElementData {
  std::array<double, 3> e1s;
  std::array<double, 3> esp;  // zeros when absent
};

inline const ElementData& element(int Z) {
  static const ElementData table[] = {
      /* H  */ {{3.42525091, 0.62391373, 0.16885540}, {0, 0, 0}},
      /* He */ {{6.36242139, 1.15892300, 0.31364979}, {0, 0, 0}},
      /* Li */ {{16.1195750, 2.93620070, 0.79465050}, {0.63628970, 0.14786010, 0.04808870}},
      /* Be */ {{30.1678710, 5.49511530, 1.48719270}, {1.31483310, 0.30553890, 0.09937070}},
      /* B  */ {{48.7911130, 8.88736220, 2.40526700}, {2.23695610, 0.51982050, 0.16906180}},
      /* C  */ {{71.6168370, 13.0450960, 3.53051220}, {2.94124940, 0.68348310, 0.22228990}},
      /* N  */ {{99.1061690, 18.0523120, 4.88566020}, {3.78045590, 0.87849660, 0.28571440}},
      /* O  */ {{130.7093200, 23.8088610, 6.44360830}, {5.03315130, 1.16959610, 0.38038900}},
      /* F  */ {{166.6791300, 30.3608120, 8.21682070}, {6.46480320, 1.50228120, 0.48858850}},
      /* Ne */ {{207.0156100, 37.7081510, 10.2052970}, {8.24631510, 1.91626620, 0.62322930}},
  };
  if (Z < 1 || Z > 10) throw ParseError("sto3g-paper covers Z = 1..10 only");
  return table[Z - 1];
}

inline constexpr std::array<double, 3> c1s = {0.1543289673, 0.5353281423, 0.4446345422};
inline constexpr std::array<double, 3> c2s = {-0.0999672292, 0.3995128261, 0.7001154689};
inline constexpr std::array<double, 3> c2p = {0.1559162750, 0.6076837186, 0.3919573931};

}  // namespace sto3g

// STO-3G with exponents brought to native units (standard values / 4).
inline BasisSet make_sto3g(const Molecule& mol) {
  BasisSet b;
  for (size_t ia = 0; ia < mol.atoms.size(); ++ia) {
    int Z = static_cast<int>(mol.atoms[ia].Z);
    const auto& ed = sto3g::element(Z);
    Shell s1;
    s1.center = static_cast<int>(ia);
    s1.l = 0;
    for (int k = 0; k < 3; ++k) {
      s1.exps.push_back(ed.e1s[k] * 0.25);
      s1.coeffs.push_back(sto3g::c1s[k]);
    }
    b.shells.push_back(std::move(s1));
    if (Z >= 3) {
      Shell s2, p2;
      s2.center = p2.center = static_cast<int>(ia);
      s2.l = 0;
      p2.l = 1;
      for (int k = 0; k < 3; ++k) {
        s2.exps.push_back(ed.esp[k] * 0.25);
        s2.coeffs.push_back(sto3g::c2s[k]);
        p2.exps.push_back(ed.esp[k] * 0.25);
        p2.coeffs.push_back(sto3g::c2p[k]);
      }
      b.shells.push_back(std::move(s2));
      b.shells.push_back(std::move(p2));
    }
  }
  return normalize_shells(std::move(b));
}

// k uncontracted s shells with exponents a0 * beta^i on every atom,
// emitted largest-first to keep the decreasing-exponent invariant.
inline BasisSet make_even_tempered(const Molecule& mol, double a0, double beta, int k) {
  if (!(a0 > 0.0) || !(beta > 0.0) || beta == 1.0 || k < 1)
    throw ParseError("even-tempered parameters require a0 > 0, beta > 0, beta != 1, k >= 1");
  BasisSet b;
  for (size_t ia = 0; ia < mol.atoms.size(); ++ia) {
    std::vector<double> exps(k);
    for (int i = 0; i < k; ++i) exps[i] = a0 * std::pow(beta, i);
    std::sort(exps.begin(), exps.end(), std::greater<double>());
    for (double a : exps) {
      Shell s;
      s.center = static_cast<int>(ia);
      s.l = 0;
      s.exps = {a};
      s.coeffs = {1.0};
      b.shells.push_back(std::move(s));
    }
  }
  return normalize_shells(std::move(b));
}

inline bool parse_even_tempered_name(const std::string& name, double& a0, double& beta, int& k) {
  auto open = name.find('(');
  if (name.rfind("even-tempered", 0) != 0 || open == std::string::npos || name.back() != ')')
    return false;
  std::string args = name.substr(open + 1, name.size() - open - 2);
  double kk = 0;
  if (std::sscanf(args.c_str(), " %lf , %lf , %lf", &a0, &beta, &kk) != 3) return false;
  if (kk != std::floor(kk)) return false;
  k = static_cast<int>(kk);
  return true;
}

inline BasisSet make_named_basis(const std::string& name, const Molecule& mol) {
  if (name == "sto3g-paper") return make_sto3g(mol);
  double a0, beta;
  int k;
  if (parse_even_tempered_name(name, a0, beta, k)) return make_even_tempered(mol, a0, beta, k);
  throw ParseError("unknown basis name: " + name);
}

// --- molecule validation ------------------------------------------------------

inline void validate_molecule(const Molecule& mol) {
  if (mol.n_electrons < 1) throw ParseError("N >= 1 required");
  if (mol.atoms.empty()) throw ParseError("at least one atom required");
  for (const auto& a : mol.atoms) {
    if (!(a.Z >= 1.0) || a.Z != std::floor(a.Z))
      throw ParseError("nuclear charges must be positive integers");
  }
  for (size_t i = 0; i < mol.atoms.size(); ++i)
    for (size_t j = i + 1; j < mol.atoms.size(); ++j) {
      double d2 = 0.0;
      for (int d = 0; d < 3; ++d) {
        double t = mol.atoms[i].pos[d] - mol.atoms[j].pos[d];
        d2 += t * t;
      }
      if (d2 < 1e-24) throw ParseError("atom positions must be pairwise distinct");
    }
}

// --- input document parsing ---------------------------------------------------

inline ParsedInput parse_input(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed input document: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("input document must be an object");

  ParsedInput out;
  if (!j.contains("atoms") || !j["atoms"].is_array() || j["atoms"].empty())
    throw ParseError("missing or empty 'atoms' array");
  for (const auto& ja : j["atoms"]) {
    Atom a;
    if (!ja.contains("Z") || !ja.contains("position")) throw ParseError("atom needs Z and position");
    a.Z = ja["Z"].get<double>();
    const auto& p = ja["position"];
    if (!p.is_array() || p.size() != 3) throw ParseError("position must be a 3-vector");
    for (int d = 0; d < 3; ++d) a.pos[d] = p[d].get<double>();
    out.mol.atoms.push_back(a);
  }
  if (!j.contains("n_electrons")) throw ParseError("missing 'n_electrons'");
  out.mol.n_electrons = j["n_electrons"].get<int>();
  validate_molecule(out.mol);

  out.file_convention =
      j.contains("convention") ? parse_convention(j["convention"].get<std::string>()) : Convention::paper;

  if (!j.contains("basis")) throw ParseError("missing 'basis'");
  const auto& jb = j["basis"];
  if (jb.is_string()) {
    out.basis_name = jb.get<std::string>();
    if (out.file_convention != Convention::paper)
      throw ParseError("named bases define their own units; convention 'standard' applies to explicit shells only");
    out.basis = make_named_basis(out.basis_name, out.mol);
  } else if (jb.is_object() && jb.contains("shells")) {
    out.basis_name = "explicit";
    for (const auto& js : jb["shells"]) {
      Shell s;
      s.center = js.value("center", 0);
      s.l = js.value("l", 0);
      if (!js.contains("primitives") || !js["primitives"].is_array())
        throw ParseError("shell needs a 'primitives' array");
      for (const auto& jp : js["primitives"]) {
        s.exps.push_back(jp.at("exp").get<double>());
        s.coeffs.push_back(jp.at("coeff").get<double>());
      }
      validate_shell(s, static_cast<int>(out.mol.atoms.size()));
      out.basis.shells.push_back(std::move(s));
    }
    if (out.file_convention == Convention::standard)
      out.basis = rescale_convention(std::move(out.basis), Convention::standard, Convention::paper);
    out.basis = normalize_shells(std::move(out.basis));
  } else {
    throw ParseError("'basis' must be a name string or an object with 'shells'");
  }

  if (out.basis.n_functions() < out.mol.n_electrons)
    throw ParseError("n_functions < N: no orthonormal orbital set exists");

  if (j.contains("options")) {
    const auto& jo = j["options"];
    out.options.max_iter = jo.value("max_iter", out.options.max_iter);
    out.options.tol_energy = jo.value("tol_energy", out.options.tol_energy);
    out.options.tol_commutator = jo.value("tol_commutator", out.options.tol_commutator);
    out.options.damping = jo.value("damping", out.options.damping);
    out.options.degeneracy_tol = jo.value("degeneracy_tol", out.options.degeneracy_tol);
    out.options.seed = jo.value("seed", out.options.seed);
    out.options.guess = jo.value("guess", out.options.guess);
    if (out.options.max_iter < 1) throw ParseError("max_iter >= 1 required");
    if (!(out.options.tol_energy > 0.0) || !(out.options.tol_commutator > 0.0))
      throw ParseError("tolerances must be positive");
    if (!(out.options.damping >= 0.0 && out.options.damping < 1.0))
      throw ParseError("damping must lie in [0,1)");
    if (out.options.guess != "core" && out.options.guess != "random")
      throw ParseError("guess must be 'core' or 'random'");
  }
  return out;
}

// Serialization uses explicit shells and native units; parse(serialize(x))
// reproduces x bit-for-bit because %.17g round-trips every double.
inline std::string serialize_input(const ParsedInput& in) {
  json j;
  j["n_electrons"] = in.mol.n_electrons;
  j["convention"] = "paper";
  json atoms = json::array();
  for (const auto& a : in.mol.atoms) {
    json ja;
    ja["Z"] = a.Z;
    ja["position"] = {a.pos[0], a.pos[1], a.pos[2]};
    atoms.push_back(ja);
  }
  j["atoms"] = atoms;
  json shells = json::array();
  for (const auto& s : in.basis.shells) {
    json js;
    js["center"] = s.center;
    js["l"] = s.l;
    json prims = json::array();
    for (size_t k = 0; k < s.exps.size(); ++k) {
      json jp;
      jp["exp"] = s.exps[k];
      jp["coeff"] = s.coeffs[k];
      prims.push_back(jp);
    }
    js["primitives"] = prims;
    shells.push_back(js);
  }
  j["basis"] = json::object();
  j["basis"]["shells"] = shells;
  json jo;
  jo["max_iter"] = in.options.max_iter;
  jo["tol_energy"] = in.options.tol_energy;
  jo["tol_commutator"] = in.options.tol_commutator;
  jo["damping"] = in.options.damping;
  jo["degeneracy_tol"] = in.options.degeneracy_tol;
  jo["seed"] = in.options.seed;
  jo["guess"] = in.options.guess;
  j["options"] = jo;
  return json_dump_g17(j);
}

inline std::uint64_t basis_hash(const Molecule& mol, const BasisSet& basis) {
  std::string canon;
  for (const auto& a : mol.atoms) {
    canon += "Z" + fmt17(a.Z);
    for (int d = 0; d < 3; ++d) canon += "," + fmt17(a.pos[d]);
    canon += ";";
  }
  canon += "|N" + std::to_string(mol.n_electrons) + "|";
  for (const auto& s : basis.shells) {
    canon += "c" + std::to_string(s.center) + "l" + std::to_string(s.l) + ":";
    for (size_t k = 0; k < s.exps.size(); ++k)
      canon += fmt17(s.exps[k]) + "," + fmt17(s.coeffs[k]) + ";";
  }
  return fnv1a64(canon);
}

}  // namespace hflab
