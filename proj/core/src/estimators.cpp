#include "eelink/estimators.hpp"

#include <cmath>
#include <limits>

#include "eelink/errors.hpp"
#include "linalg.hpp"

namespace eelink {

double expit(double t) noexcept {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double et = std::exp(t);
  return et / (1.0 + et);
}

double propensity(const Vec& x, const PropensityModel& model) {
  const int q = static_cast<int>(x.size());
  if (static_cast<int>(model.h.size()) != q + (model.intercept ? 1 : 0)) {
    throw ValidationError("propensity: coefficient dimension " + std::to_string(model.h.size()) +
                          " does not match covariate dimension " + std::to_string(q));
  }
  double t = model.intercept ? model.h[0] + model.h.tail(q).dot(x) : model.h.dot(x);
  return expit(t);
}

Vec propensities(const Mat& xt, const Vec& h) {
  Vec eta = xt * h;
  Vec e(eta.size());
  for (int i = 0; i < eta.size(); ++i) e[i] = expit(eta[i]);
  return e;
}

namespace {

// Perfect weighted classification at a converged score root signals
// (quasi-)separation: the iterates ran off to an infinite MLE.
bool weighted_perfect_fit(const Vec& z, const Vec& e, const Vec& w) {
  for (int i = 0; i < z.size(); ++i) {
    if (w[i] > 1e-12 && std::abs(z[i] - e[i]) > 1e-6) return false;
  }
  return true;
}

}  // namespace

NuisanceFit fit_logistic_weighted(const Mat& xt, const Vec& z, const Vec& w,
                                  const SolveOptions& opts) {
  const int k = static_cast<int>(xt.cols());
  if (k < 1) throw ValidationError("logistic fit needs at least one column");

  Vec h = Vec::Zero(k);
  Vec e = propensities(xt, h);
  Vec score = xt.transpose() * (w.array() * (z - e).array()).matrix();
  double sup = score.cwiseAbs().maxCoeff();

  NuisanceFit fit;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (sup <= opts.tol) {
      if (weighted_perfect_fit(z, e, w)) {
        throw SolverDiverged("logistic fit: data are separated under these weights");
      }
      fit.h = h;
      fit.iterations = iter;
      fit.score_sup_norm = sup;
      fit.converged = true;
      return fit;
    }
    Vec wv = (w.array() * e.array() * (1.0 - e.array())).matrix();
    Mat info = xt.transpose() * wv.asDiagonal() * xt;
    Vec delta = detail::solve_spd_checked(info, score, "logistic fit");
    if (!delta.allFinite()) throw SolverDiverged("logistic fit: non-finite Newton step");

    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      Vec h_try = h + step * delta;
      Vec e_try = propensities(xt, h_try);
      Vec score_try = xt.transpose() * (w.array() * (z - e_try).array()).matrix();
      double sup_try = score_try.cwiseAbs().maxCoeff();
      if (std::isfinite(sup_try) && sup_try < sup) {
        h = std::move(h_try);
        e = std::move(e_try);
        score = std::move(score_try);
        sup = sup_try;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      throw SolverDiverged("logistic fit: step-halving stalled at score sup-norm " +
                           std::to_string(sup));
    }
  }
  throw SolverDiverged("logistic fit: no convergence in " + std::to_string(opts.max_iter) +
                       " iterations (score sup-norm " + std::to_string(sup) + ")");
}

NuisanceFit fit_logistic_weighted(const Dataset& d, const WeightVector& w, bool intercept,
                                  const SolveOptions& opts) {
  if (w.size() != d.n()) throw ValidationError("weights length does not match dataset");
  DesignView dv = DesignView::build(d, intercept);
  return fit_logistic_weighted(dv.xt, dv.z, w.values(), opts);
}

double g_estimate(const DesignView& dv, const Vec& w, const Vec& e) {
  Eigen::ArrayXd zme = dv.z.array() - e.array();
  double den = (w.array() * dv.z.array() * zme).sum();
  if (std::abs(den) <= 1e-12) {
    throw NotIdentified("g-estimation denominator " + std::to_string(den) +
                        " below threshold (no usable treatment variation)");
  }
  double num = (w.array() * dv.y.array() * zme).sum();
  return num / den;
}

double ipw_estimate(const DesignView& dv, const Vec& w, const Vec& e, double eps_overlap) {
  for (int i = 0; i < e.size(); ++i) {
    if (e[i] <= eps_overlap || e[i] >= 1.0 - eps_overlap) {
      throw OverlapViolation("propensity " + std::to_string(e[i]) + " at row " +
                             std::to_string(i) + " outside (" + std::to_string(eps_overlap) +
                             ", 1-eps)");
    }
  }
  Eigen::ArrayXd term = dv.z.array() * dv.y.array() / e.array() -
                        (1.0 - dv.z.array()) * dv.y.array() / (1.0 - e.array());
  return (w.array() * term).sum();
}

double att_estimate(const DesignView& dv, const Vec& w, const Vec& e, double eps_overlap) {
  double treated_mass = (w.array() * dv.z.array()).sum();
  if (treated_mass <= 1e-12) throw NotIdentified("ATT: no treated mass under these weights");
  for (int i = 0; i < e.size(); ++i) {
    if (dv.z[i] == 0.0 && e[i] >= 1.0 - eps_overlap) {
      throw OverlapViolation("ATT: control propensity " + std::to_string(e[i]) + " at row " +
                             std::to_string(i) + " >= 1-eps");
    }
  }
  Eigen::ArrayXd term = dv.z.array() * dv.y.array() -
                        dv.y.array() * (1.0 - dv.z.array()) * e.array() / (1.0 - e.array());
  return (w.array() * term).sum() / treated_mass;
}

PsRegFit psreg_estimate(const DesignView& dv, const Vec& w, const Vec& e) {
  double gzz = (w.array() * dv.z.array() * dv.z.array()).sum();
  double gze = (w.array() * dv.z.array() * e.array()).sum();
  double gee = (w.array() * e.array() * e.array()).sum();
  double bz = (w.array() * dv.z.array() * dv.y.array()).sum();
  double be = (w.array() * e.array() * dv.y.array()).sum();
  double det = gzz * gee - gze * gze;
  double scale = std::max(gzz * gee, 1e-300);
  if (std::abs(det) <= 1e-10 * scale) {
    throw NotIdentified("propensity-score regression: z and e collinear under these weights");
  }
  PsRegFit fit;
  fit.theta = (gee * bz - gze * be) / det;
  fit.phi = (gzz * be - gze * bz) / det;
  return fit;
}

namespace {

Vec model_propensities(const Dataset& d, const PropensityModel& model) {
  Mat xt = design_matrix(d, model.intercept);
  if (xt.cols() != model.h.size()) {
    throw ValidationError("propensity model dimension " + std::to_string(model.h.size()) +
                          " does not match design width " + std::to_string(xt.cols()));
  }
  return propensities(xt, model.h);
}

}  // namespace

double g_estimate(const Dataset& d, const WeightVector& w, const PropensityModel& model) {
  DesignView dv = DesignView::build(d, false);
  return g_estimate(dv, w.values(), model_propensities(d, model));
}

double ipw_estimate(const Dataset& d, const WeightVector& w, const PropensityModel& model,
                    double eps_overlap) {
  DesignView dv = DesignView::build(d, false);
  return ipw_estimate(dv, w.values(), model_propensities(d, model), eps_overlap);
}

double att_estimate(const Dataset& d, const WeightVector& w, const PropensityModel& model,
                    double eps_overlap) {
  DesignView dv = DesignView::build(d, false);
  return att_estimate(dv, w.values(), model_propensities(d, model), eps_overlap);
}

PsRegFit psreg_estimate(const Dataset& d, const WeightVector& w, const PropensityModel& model) {
  DesignView dv = DesignView::build(d, false);
  return psreg_estimate(dv, w.values(), model_propensities(d, model));
}

namespace {

Vec weighted_target_sum(const EstimandSpec& spec, const Dataset& d, const Vec& w,
                        const Vec& theta, const Vec& h) {
  Vec g = Vec::Zero(spec.p);
  for (int i = 0; i < d.n(); ++i) g += w[i] * spec.target_score(d.rows[i], theta, h);
  return g;
}

Mat target_jacobian(const EstimandSpec& spec, const Dataset& d, const Vec& w, const Vec& theta,
                    const Vec& h) {
  if (spec.derivatives && spec.derivatives->dm_dtheta) {
    Mat j = Mat::Zero(spec.p, spec.p);
    for (int i = 0; i < d.n(); ++i) {
      j += w[i] * spec.derivatives->dm_dtheta(d.rows[i], theta, h);
    }
    return j;
  }
  // Central finite differences, step 1e-6 * (1 + |theta_k|).
  Mat j(spec.p, spec.p);
  for (int k = 0; k < spec.p; ++k) {
    double step = 1e-6 * (1.0 + std::abs(theta[k]));
    Vec tp = theta, tm = theta;
    tp[k] += step;
    tm[k] -= step;
    j.col(k) = (weighted_target_sum(spec, d, w, tp, h) -
                weighted_target_sum(spec, d, w, tm, h)) /
               (2.0 * step);
  }
  return j;
}

}  // namespace

Vec solve_weighted_ee(const EstimandSpec& spec, const Dataset& d, const WeightVector& wv,
                      const Vec& h, Vec init, const SolveOptions& opts) {
  if (wv.size() != d.n()) throw ValidationError("weights length does not match dataset");
  const Vec& w = wv.values();
  Vec theta = (init.size() == spec.p) ? init : Vec::Zero(spec.p);

  Vec g = weighted_target_sum(spec, d, w, theta, h);
  if (!g.allFinite()) throw SolverDiverged("weighted EE: score non-finite at start");
  double sup = g.cwiseAbs().maxCoeff();

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (sup <= opts.tol) return theta;
    Mat j = target_jacobian(spec, d, w, theta, h);
    Mat j_inv = detail::invert_checked(j, "weighted EE Jacobian");
    Vec delta = -(j_inv * g);
    if (!delta.allFinite()) throw SolverDiverged("weighted EE: non-finite Newton step");

    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      Vec theta_try = theta + step * delta;
      Vec g_try = weighted_target_sum(spec, d, w, theta_try, h);
      double sup_try = g_try.allFinite() ? g_try.cwiseAbs().maxCoeff()
                                         : std::numeric_limits<double>::infinity();
      if (sup_try < sup) {
        theta = std::move(theta_try);
        g = std::move(g_try);
        sup = sup_try;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      throw SolverDiverged("weighted EE: step-halving stalled at score sup-norm " +
                           std::to_string(sup));
    }
  }
  throw SolverDiverged("weighted EE: no convergence in " + std::to_string(opts.max_iter) +
                       " iterations");
}

namespace {

Vec weighted_gradient(const WeightedLoss& loss, const Dataset& d, const Vec& w,
                      const Vec& theta) {
  Vec g = Vec::Zero(loss.dim);
  for (int i = 0; i < d.n(); ++i) g += w[i] * loss.gradient(d.rows[i], theta);
  return g;
}

Mat curvature(const WeightedLoss& loss, const Dataset& d, const Vec& w, const Vec& theta) {
  if (loss.hessian) {
    Mat h = Mat::Zero(loss.dim, loss.dim);
    for (int i = 0; i < d.n(); ++i) h += w[i] * loss.hessian(d.rows[i], theta);
    return h;
  }
  Mat h(loss.dim, loss.dim);
  for (int k = 0; k < loss.dim; ++k) {
    double step = 1e-6 * (1.0 + std::abs(theta[k]));
    Vec tp = theta, tm = theta;
    tp[k] += step;
    tm[k] -= step;
    h.col(k) = (weighted_gradient(loss, d, w, tp) - weighted_gradient(loss, d, w, tm)) /
               (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace

Vec minimize_weighted_loss(const WeightedLoss& loss, const Dataset& d, const WeightVector& wv,
                           Vec init, const SolveOptions& opts) {
  if (!loss.value || !loss.gradient) throw ValidationError("loss needs value and gradient");
  if (wv.size() != d.n()) throw ValidationError("weights length does not match dataset");
  const Vec& w = wv.values();
  Vec theta = (init.size() == loss.dim) ? init : Vec::Zero(loss.dim);

  Vec g = weighted_gradient(loss, d, w, theta);
  if (!g.allFinite()) throw SolverDiverged("loss minimization: gradient non-finite at start");
  double sup = g.cwiseAbs().maxCoeff();

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (sup <= opts.tol) return theta;
    Mat h = curvature(loss, d, w, theta);
    // Ridge damping keeps the direction usable when the curvature is
    // indefinite or near-singular.
    double ridge = 0.0;
    Vec delta;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Mat hd = h + ridge * Mat::Identity(loss.dim, loss.dim);
      Eigen::LDLT<Mat> ldlt(hd);
      if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
        delta = -ldlt.solve(g);
        if (delta.allFinite()) break;
      }
      ridge = (ridge == 0.0) ? 1e-8 * (1.0 + h.cwiseAbs().maxCoeff()) : ridge * 10.0;
      delta.resize(0);
    }
    if (delta.size() == 0) throw SolverDiverged("loss minimization: unusable curvature");

    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      Vec theta_try = theta + step * delta;
      Vec g_try = weighted_gradient(loss, d, w, theta_try);
      double sup_try = g_try.allFinite() ? g_try.cwiseAbs().maxCoeff()
                                         : std::numeric_limits<double>::infinity();
      if (sup_try < sup) {
        theta = std::move(theta_try);
        g = std::move(g_try);
        sup = sup_try;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      throw SolverDiverged("loss minimization: step-halving stalled at gradient sup-norm " +
                           std::to_string(sup));
    }
  }
  throw SolverDiverged("loss minimization: no convergence in " + std::to_string(opts.max_iter) +
                       " iterations");
}

WeightedLoss logistic_nll_loss(int q, bool intercept) {
  WeightedLoss loss;
  loss.dim = q + (intercept ? 1 : 0);
  loss.value = [intercept](const Observation& o, const Vec& h) -> double {
    Vec xt = augmented_x(o, intercept);
    double t = h.dot(xt);
    // softplus(t) - z t, computed without overflow
    double softplus = std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
    return softplus - o.z * t;
  };
  loss.gradient = [intercept](const Observation& o, const Vec& h) -> Vec {
    Vec xt = augmented_x(o, intercept);
    double e = expit(h.dot(xt));
    return (e - o.z) * xt;
  };
  loss.hessian = [intercept](const Observation& o, const Vec& h) -> Mat {
    Vec xt = augmented_x(o, intercept);
    double e = expit(h.dot(xt));
    return (e * (1.0 - e)) * (xt * xt.transpose());
  };
  return loss;
}

}  // namespace eelink
