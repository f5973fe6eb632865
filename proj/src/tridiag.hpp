// Hermitian tridiagonal reduction shared by the QCQP multiplier searches.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "aircomp/linalg.hpp"

namespace aircomp::detail {

// C = Q T Q^H with T real symmetric tridiagonal.
class HermitianTridiag {
 public:
  explicit HermitianTridiag(const CMat& C)
      : tri_(C), d_(tri_.diagonal()), e_(tri_.subDiagonal()), piv_(C.rows()) {}

  Eigen::Index size() const { return d_.size(); }

  CVec to_basis(const CVec& x) const { return tri_.matrixQ().adjoint() * x; }
  CVec from_basis(const CVec& x) const { return tri_.matrixQ() * x; }

  // Solves (alpha I + beta T) x = r. Returns false when the shifted matrix is
  // not numerically positive definite.
  bool solve_shifted(double alpha, double beta, const CVec& r, CVec& x) {
    const Eigen::Index n = size();
    x.resize(n);
    double p = alpha + beta * d_(0);
    if (!(p > 0.0)) return false;
    piv_[0] = p;
    x(0) = r(0);
    for (Eigen::Index i = 1; i < n; ++i) {
      const double off = beta * e_(i - 1);
      const double l = off / piv_[i - 1];
      p = alpha + beta * d_(i) - l * off;
      if (!(p > 0.0)) return false;
      piv_[i] = p;
      x(i) = r(i) - l * x(i - 1);
    }
    x(n - 1) /= piv_[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = (x(i) - beta * e_(i) * x(i + 1)) / piv_[i];
    return true;
  }

  // Re(x^H T x)
  double quad(const CVec& x) const {
    const Eigen::Index n = size();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += d_(i) * std::norm(x(i));
    for (Eigen::Index i = 0; i + 1 < n; ++i) s += 2.0 * e_(i) * (std::conj(x(i)) * x(i + 1)).real();
    return s;
  }

 private:
  Eigen::Tridiagonalization<CMat> tri_;
  RVec d_, e_;
  std::vector<double> piv_;
};

}  // namespace aircomp::detail
