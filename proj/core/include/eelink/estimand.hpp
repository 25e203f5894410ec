#pragma once

#include <functional>
#include <optional>

#include "eelink/types.hpp"

namespace eelink {

enum class EstimandKind { gest, ipw, att, psreg, custom };

std::string to_string(EstimandKind k);

// Per-observation analytic derivatives of the estimating system.
// Conventions: dm_dtheta(i,j) = d m_i / d theta_j (p x p),
// dm_dh(i,j) = d m_i / d h_j (p x q), du_dh(i,j) = d u_i / d h_j (q x q).
struct ScoreDerivatives {
  std::function<Mat(const Observation&, const Vec& theta, const Vec& h)> dm_dtheta;
  std::function<Mat(const Observation&, const Vec& theta, const Vec& h)> dm_dh;
  std::function<Mat(const Observation&, const Vec& h)> du_dh;
};

// An estimating system: target score m with target dimension p, and an
// optional nuisance score u with dimension q_nuis. When intercept is
// set, the nuisance design is the covariate vector prefixed by 1 and h
// gains a leading coordinate.
struct EstimandSpec {
  EstimandKind kind = EstimandKind::custom;
  int p = 1;
  int q_nuis = 0;
  bool intercept = false;

  std::function<Vec(const Observation&, const Vec& theta, const Vec& h)> target_score;
  std::function<Vec(const Observation&, const Vec& h)> nuisance_score;
  std::optional<ScoreDerivatives> derivatives;

  bool has_nuisance() const { return q_nuis > 0; }
};

// Intercept-augmented covariate vector used by the built-in nuisance
// model and propensity evaluations.
Vec augmented_x(const Observation& o, bool intercept);

// Built-in estimating systems. q is the raw covariate dimension; the
// logistic nuisance has dimension q or q+1 depending on intercept.
//
// gest:  m = (y - theta*z) * (z - e(x;h))
// ipw:   m = theta - z*y/e + (1-z)*y/(1-e)
// att:   m = z*y - y*(1-z)*e/(1-e) - theta*z
// psreg: m = ((y - theta*z - phi*e)*z, (y - theta*z - phi*e)*e), p = 2
// All use the logistic score u = x~ * (z - e) as nuisance system and
// ship analytic derivative bundles.
EstimandSpec make_gest_spec(int q, bool intercept);
EstimandSpec make_ipw_spec(int q, bool intercept);
EstimandSpec make_att_spec(int q, bool intercept);
EstimandSpec make_psreg_spec(int q, bool intercept);

// Mean functional m = y - theta with no nuisance. Used in tests and as
// the smallest example of a custom spec.
EstimandSpec make_mean_spec();

}  // namespace eelink
