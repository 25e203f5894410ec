#pragma once

#include <Eigen/Dense>
#include <string>

#include "eelink/errors.hpp"
#include "eelink/types.hpp"

namespace eelink::detail {

inline constexpr double kConditionThreshold = 1e-10;

// Inverse through a fully pivoted LU, failing loudly when the smallest
// pivot falls below kConditionThreshold relative to the largest.
inline Mat invert_checked(const Mat& a, const char* what) {
  Eigen::FullPivLU<Mat> lu(a);
  const Mat& u = lu.matrixLU();
  double max_pivot = 0.0, min_pivot = 0.0;
  for (int i = 0; i < u.rows() && i < u.cols(); ++i) {
    double p = std::abs(u(i, i));
    max_pivot = std::max(max_pivot, p);
    min_pivot = (i == 0) ? p : std::min(min_pivot, p);
  }
  if (!(max_pivot > 0.0) || min_pivot < kConditionThreshold * max_pivot) {
    throw SingularJacobian(std::string(what) + ": matrix numerically singular (relative pivot " +
                           std::to_string(max_pivot > 0 ? min_pivot / max_pivot : 0.0) + ")");
  }
  return lu.inverse();
}

// Solve of an SPD system (weighted information matrix) via LDLT with
// the same relative condition check on the diagonal factor.
inline Vec solve_spd_checked(const Mat& a, const Vec& b, const char* what) {
  Eigen::LDLT<Mat> ldlt(a);
  if (ldlt.info() != Eigen::Success) {
    throw SingularJacobian(std::string(what) + ": factorization failed");
  }
  Vec d = ldlt.vectorD();
  double dmax = d.cwiseAbs().maxCoeff();
  double dmin = d.cwiseAbs().minCoeff();
  if (!(dmax > 0.0) || dmin < kConditionThreshold * dmax || (d.array() <= 0.0).any()) {
    throw SingularJacobian(std::string(what) + ": information matrix numerically singular");
  }
  return ldlt.solve(b);
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace eelink::detail
