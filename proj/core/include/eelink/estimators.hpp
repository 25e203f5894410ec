#pragma once

#include <functional>
#include <optional>

#include "eelink/estimand.hpp"
#include "eelink/types.hpp"

namespace eelink {

inline constexpr double kDefaultOverlapEps = 1e-6;

// Logistic propensity model e(x;h) = expit(h . x~), where x~ is x
// optionally prefixed by a constant 1.
struct PropensityModel {
  Vec h;
  bool intercept = false;
};

struct PsRegFit {
  double theta = 0.0;
  double phi = 0.0;
};

// Numerically stable expit: exp(t)/(1+exp(t)) for t < 0, 1/(1+exp(-t))
// otherwise. Never returns NaN for finite t.
double expit(double t) noexcept;

double propensity(const Vec& x, const PropensityModel& model);

// Row-wise expit(xt * h) for a prebuilt design block.
Vec propensities(const Mat& xt, const Vec& h);

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 100;
  int max_halvings = 30;
};

// Weighted logistic fit by Newton-Raphson on the score
//   sum_i w_i x~_i (z_i - e_i) = 0
// with Jacobian -sum_i w_i x~_i x~_i' e_i (1-e_i), started at h = 0.
// Step-halving (up to max_halvings) whenever the score sup-norm fails
// to decrease. Converged when the sup-norm is <= tol.
NuisanceFit fit_logistic_weighted(const Dataset& d, const WeightVector& w,
                                  bool intercept, const SolveOptions& opts = {});

// Hot-path overload on cached columns; xt must already carry the
// intercept column if one is wanted.
NuisanceFit fit_logistic_weighted(const Mat& xt, const Vec& z, const Vec& w,
                                  const SolveOptions& opts = {});

// Closed-form weighted G-estimator
//   sum w y (z - e) / sum w z (z - e).
double g_estimate(const Dataset& d, const WeightVector& w, const PropensityModel& model);
double g_estimate(const DesignView& dv, const Vec& w, const Vec& e);

// Weighted IPW estimator sum w [z y / e - (1-z) y / (1-e)].
double ipw_estimate(const Dataset& d, const WeightVector& w, const PropensityModel& model,
                    double eps_overlap = kDefaultOverlapEps);
double ipw_estimate(const DesignView& dv, const Vec& w, const Vec& e,
                    double eps_overlap = kDefaultOverlapEps);

// Weighted ATT estimator
//   sum w [z y - y (1-z) e / (1-e)] / sum w z.
double att_estimate(const Dataset& d, const WeightVector& w, const PropensityModel& model,
                    double eps_overlap = kDefaultOverlapEps);
double att_estimate(const DesignView& dv, const Vec& w, const Vec& e,
                    double eps_overlap = kDefaultOverlapEps);

// Weighted least squares of y on the two columns (z, e).
PsRegFit psreg_estimate(const Dataset& d, const WeightVector& w, const PropensityModel& model);
PsRegFit psreg_estimate(const DesignView& dv, const Vec& w, const Vec& e);

// Newton iteration on G(theta) = sum_i w_i m(O_i; theta, h) with h held
// fixed. Uses analytic dm/dtheta when the spec provides it, otherwise
// central finite differences with step 1e-6 * (1 + |theta_k|).
Vec solve_weighted_ee(const EstimandSpec& spec, const Dataset& d, const WeightVector& w,
                      const Vec& h, Vec init = Vec(), const SolveOptions& opts = {});

// A per-observation differentiable loss. hessian is optional; when
// absent the minimizer builds curvature from finite differences of the
// weighted gradient.
struct WeightedLoss {
  int dim = 1;
  std::function<double(const Observation&, const Vec&)> value;
  std::function<Vec(const Observation&, const Vec&)> gradient;
  std::function<Mat(const Observation&, const Vec&)> hessian;  // may be empty
};

// Damped (quasi-)Newton descent on the weighted empirical loss.
// Converged when the weighted gradient sup-norm is <= tol.
Vec minimize_weighted_loss(const WeightedLoss& loss, const Dataset& d, const WeightVector& w,
                           Vec init = Vec(),
                           const SolveOptions& opts = {.tol = 1e-8, .max_iter = 500, .max_halvings = 30});

// Negative log-likelihood of the logistic model, packaged as a
// WeightedLoss over the intercept-augmented design.
WeightedLoss logistic_nll_loss(int q, bool intercept);

}  // namespace eelink
