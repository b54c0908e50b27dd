#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hflab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Eigenpairs of a symmetric matrix, ascending.
inline void sym_eig(const Mat& A, Vec& evals, Mat& evecs) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  evals = es.eigenvalues();
  evecs = es.eigenvectors();
}

inline Vec sym_eigvals(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Generalized symmetric problem A v = lambda B v with B positive definite;
// returned vectors satisfy V^T B V = I (matches the convention the Hessian
// and SCF code relies on).
inline void gen_sym_eig(const Mat& A, const Mat& B, Vec& evals, Mat& evecs) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(A, B);
  evals = es.eigenvalues();
  evecs = es.eigenvectors();
}

inline Vec gen_sym_eigvals(const Mat& A, const Mat& B) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(A, B, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Symmetric inverse square root plus spectral extremes of a PD matrix.
struct InvSqrtResult {
  Mat X;
  double smin = 0.0;
  double smax = 0.0;
  double cond() const { return smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity(); }
};

inline InvSqrtResult sym_inv_sqrt(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  InvSqrtResult r;
  const Vec& w = es.eigenvalues();
  r.smin = w(0);
  r.smax = w(w.size() - 1);
  Vec winv = w.array().rsqrt();
  r.X = es.eigenvectors() * winv.asDiagonal() * es.eigenvectors().transpose();
  return r;
}

// Tridiagonal LU with partial pivoting (the classic gttrf/gttrs pair).
// Pivoting matters here: the shifted Numerov pencils this factors are
// strongly indefinite near an eigenvalue.
class TriLU {
 public:
  // dl: n-1 subdiagonal, d: n diagonal, du: n-1 superdiagonal
  TriLU(Vec dl, Vec d, Vec du) : dl_(std::move(dl)), d_(std::move(d)), du_(std::move(du)) {
    const int n = static_cast<int>(d_.size());
    du2_ = Vec::Zero(n > 2 ? n - 2 : 0);
    ipiv_.assign(static_cast<size_t>(n), 0);
    for (int i = 0; i < n - 1; ++i) {
      if (std::abs(d_(i)) >= std::abs(dl_(i))) {
        ipiv_[static_cast<size_t>(i)] = i;
        if (d_(i) != 0.0) {
          double fact = dl_(i) / d_(i);
          dl_(i) = fact;
          d_(i + 1) -= fact * du_(i);
        }
        if (i < n - 2) du2_(i) = 0.0;
      } else {
        ipiv_[static_cast<size_t>(i)] = i + 1;
        double fact = d_(i) / dl_(i);
        d_(i) = dl_(i);
        dl_(i) = fact;
        double tmp = du_(i);
        du_(i) = d_(i + 1);
        d_(i + 1) = tmp - fact * d_(i + 1);
        if (i < n - 2) {
          du2_(i) = du_(i + 1);
          du_(i + 1) = -fact * du_(i + 1);
        }
      }
    }
    if (n > 0) ipiv_[static_cast<size_t>(n - 1)] = n - 1;
  }

  Vec solve(Vec b) const {
    const int n = static_cast<int>(d_.size());
    for (int i = 0; i < n - 1; ++i) {
      if (ipiv_[static_cast<size_t>(i)] == i) {
        b(i + 1) -= dl_(i) * b(i);
      } else {
        double tmp = b(i);
        b(i) = b(i + 1);
        b(i + 1) = tmp - dl_(i) * b(i);
      }
    }
    b(n - 1) /= d_(n - 1);
    if (n > 1) b(n - 2) = (b(n - 2) - du_(n - 2) * b(n - 1)) / d_(n - 2);
    for (int i = n - 3; i >= 0; --i)
      b(i) = (b(i) - du_(i) * b(i + 1) - du2_(i) * b(i + 2)) / d_(i);
    return b;
  }

 private:
  Vec dl_, d_, du_, du2_;
  std::vector<int> ipiv_;
};

}  // namespace hflab
