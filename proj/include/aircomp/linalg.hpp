#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace aircomp {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

// Raised when an argument has the wrong shape or is outside its domain.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a solver cannot produce a valid iterate (singular system,
// failed multiplier search, broken monotonicity).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError("dimension mismatch: " + what);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Relative Hermitian defect ||X - X^H||_F / max(||X||_F, tiny).
inline double hermitian_defect(const CMat& x) {
  const double scale = std::max(x.norm(), 1e-300);
  return (x - x.adjoint()).norm() / scale;
}

}  // namespace aircomp
