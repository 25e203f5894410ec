#pragma once

#include <optional>
#include <utility>

#include "eelink/rng.hpp"
#include "eelink/types.hpp"

namespace eelink {

enum class DesignKind { gest6, ipw2 };
enum class Estimand { gest, ipw, att, psreg };

std::string to_string(DesignKind k);
std::string to_string(Estimand e);

// The two built-in simulation designs.
//
// gest6: X in R^6 ~ MVN(0, S) with S(i,j) = 0.8^|i-j|,
//        g0(X) = X1 + exp(X2-1) + |X3| + exp(X4-1) + |X5| + |X5 X6|,
//        e0 = expit(h0'X) with h0 = (1,2,3,4,5,6)/16,
//        Z ~ Bernoulli(e0), Y = 3 Z + g0(X) + N(0,1).
//
// ipw2:  X1 ~ N(1/2, 1/16), X2 ~ N(1, 1/4) independent (variances),
//        g0 = 2 X1 + X2, e0 = expit(X1 + X2/2) so h0 = (1, 1/2),
//        Z ~ Bernoulli(e0), Y = 3 Z + g0 + N(0,1).
struct DesignSpec {
  DesignKind kind = DesignKind::gest6;
  double theta0 = 3.0;
  Vec h0;
  int q = 0;

  static DesignSpec make(DesignKind kind);

  // Reference asymptotic variance of the two-step estimator:
  // 22.32 for gest on gest6; 5.68 for gest/ipw on ipw2; 6.18 for att
  // on ipw2.
  double asymptotic_variance_ref(Estimand e) const;
};

// True parameter values attached to a generated dataset. e0_values are
// the exact per-row propensities at h0 (no intercept).
struct TruthBundle {
  double theta0 = 3.0;
  Vec h0;
  Vec e0_values;
};

// AR(1)-style covariance with entry (i,j) = rho^|i-j|.
Mat ar_covariance(int q, double rho);

// Test hooks: zero_noise drops the outcome noise term; force_z pins the
// treatment. With hooks active the single-arm regeneration loop and
// validation are skipped.
struct GenHooks {
  bool zero_noise = false;
  std::optional<int> force_z;
};

// Per-row draw order is fixed for reproducibility: the covariate
// normals, then one uniform for the treatment, then one normal for the
// outcome noise. A sample that ends up single-arm is regenerated from
// the same stream, with an error after 100 attempts.
std::pair<Dataset, TruthBundle> gen_gest_design(int n, RandomStream& stream,
                                                const GenHooks& hooks = {});
std::pair<Dataset, TruthBundle> gen_ipw_design(int n, RandomStream& stream,
                                               const GenHooks& hooks = {});

std::pair<Dataset, TruthBundle> generate_design(DesignKind kind, int n, RandomStream& stream,
                                                const GenHooks& hooks = {});

// The gest6 outcome regression g0, exposed for tests.
double gest_g0(const Vec& x);

}  // namespace eelink
