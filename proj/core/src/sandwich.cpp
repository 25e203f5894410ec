#include "eelink/sandwich.hpp"

#include <cmath>

#include "eelink/errors.hpp"
#include "linalg.hpp"

namespace eelink {

namespace {

Mat symmetrize(const Mat& s) { return 0.5 * (s + s.transpose()); }

// Per-observation scores stacked into n x p / n x q matrices.
Mat score_rows(const EstimandSpec& spec, const Dataset& d, const Vec& theta, const Vec& h) {
  Mat m(d.n(), spec.p);
  for (int i = 0; i < d.n(); ++i) {
    m.row(i) = spec.target_score(d.rows[i], theta, h).transpose();
  }
  return m;
}

Mat nuisance_rows(const EstimandSpec& spec, const Dataset& d, const Vec& h) {
  Mat u(d.n(), spec.q_nuis);
  for (int i = 0; i < d.n(); ++i) {
    u.row(i) = spec.nuisance_score(d.rows[i], h).transpose();
  }
  return u;
}

Vec mean_target(const EstimandSpec& spec, const Dataset& d, const Vec& theta, const Vec& h) {
  Vec g = Vec::Zero(spec.p);
  for (int i = 0; i < d.n(); ++i) g += spec.target_score(d.rows[i], theta, h);
  return g / d.n();
}

Vec mean_nuisance(const EstimandSpec& spec, const Dataset& d, const Vec& h) {
  Vec g = Vec::Zero(spec.q_nuis);
  for (int i = 0; i < d.n(); ++i) g += spec.nuisance_score(d.rows[i], h);
  return g / d.n();
}

}  // namespace

Jacobians empirical_jacobians(const EstimandSpec& spec, const Dataset& d, const Vec& theta_hat,
                              const Vec& h_hat) {
  if (!theta_hat.allFinite() || !h_hat.allFinite()) {
    throw ValidationError("empirical_jacobians requires finite estimates");
  }
  const int n = d.n(), p = spec.p, q = spec.q_nuis;
  Jacobians jac;

  if (spec.derivatives && spec.derivatives->dm_dtheta) {
    Mat sum = Mat::Zero(p, p);
    for (int i = 0; i < n; ++i) sum += spec.derivatives->dm_dtheta(d.rows[i], theta_hat, h_hat);
    jac.M_theta = sum / n;
  } else {
    jac.M_theta.resize(p, p);
    for (int k = 0; k < p; ++k) {
      double step = 1e-6 * (1.0 + std::abs(theta_hat[k]));
      Vec tp = theta_hat, tm = theta_hat;
      tp[k] += step;
      tm[k] -= step;
      jac.M_theta.col(k) =
          (mean_target(spec, d, tp, h_hat) - mean_target(spec, d, tm, h_hat)) / (2.0 * step);
    }
  }

  if (q > 0) {
    if (spec.derivatives && spec.derivatives->dm_dh) {
      Mat sum = Mat::Zero(p, q);
      for (int i = 0; i < n; ++i) sum += spec.derivatives->dm_dh(d.rows[i], theta_hat, h_hat);
      jac.M_h = sum / n;
    } else {
      jac.M_h.resize(p, q);
      for (int k = 0; k < q; ++k) {
        double step = 1e-6 * (1.0 + std::abs(h_hat[k]));
        Vec hp = h_hat, hm = h_hat;
        hp[k] += step;
        hm[k] -= step;
        jac.M_h.col(k) =
            (mean_target(spec, d, theta_hat, hp) - mean_target(spec, d, theta_hat, hm)) /
            (2.0 * step);
      }
    }
    if (spec.derivatives && spec.derivatives->du_dh) {
      Mat sum = Mat::Zero(q, q);
      for (int i = 0; i < n; ++i) sum += spec.derivatives->du_dh(d.rows[i], h_hat);
      jac.U_h = sum / n;
    } else {
      jac.U_h.resize(q, q);
      for (int k = 0; k < q; ++k) {
        double step = 1e-6 * (1.0 + std::abs(h_hat[k]));
        Vec hp = h_hat, hm = h_hat;
        hp[k] += step;
        hm[k] -= step;
        jac.U_h.col(k) =
            (mean_nuisance(spec, d, hp) - mean_nuisance(spec, d, hm)) / (2.0 * step);
      }
    }
  } else {
    jac.M_h.resize(p, 0);
    jac.U_h.resize(0, 0);
  }
  return jac;
}

Mat sandwich_plain(const EstimandSpec& spec, const Dataset& d, const Vec& theta_hat) {
  if (spec.has_nuisance()) {
    throw ValidationError("sandwich_plain is for specs without a nuisance system");
  }
  Jacobians jac = empirical_jacobians(spec, d, theta_hat, Vec::Zero(spec.q_nuis));
  Mat a_inv = detail::invert_checked(jac.M_theta, "sandwich A");
  Mat m = score_rows(spec, d, theta_hat, Vec());
  Mat b = (m.transpose() * m) / d.n();
  return symmetrize(a_inv * b * a_inv.transpose());
}

Mat sandwich_sigma(const EstimandSpec& spec, const Dataset& d, const Vec& theta_hat,
                   const Vec& h_hat) {
  Jacobians jac = empirical_jacobians(spec, d, theta_hat, h_hat);
  Mat a_inv = detail::invert_checked(jac.M_theta, "sandwich M_theta");
  Mat m = score_rows(spec, d, theta_hat, h_hat);
  Mat b = (m.transpose() * m) / d.n();
  return symmetrize(a_inv * b * a_inv.transpose());
}

SandwichEstimate sandwich_linked(const EstimandSpec& spec, const Dataset& d, const Vec& theta_hat,
                                 const Vec& h_hat) {
  if (!spec.has_nuisance()) {
    throw ValidationError("sandwich_linked requires a spec with a nuisance system");
  }
  const int n = d.n(), p = spec.p, q = spec.q_nuis;
  SandwichEstimate est;
  est.n_used = n;

  Jacobians jac = empirical_jacobians(spec, d, theta_hat, h_hat);
  est.M_theta = jac.M_theta;
  est.M_h = jac.M_h;
  est.U_h = jac.U_h;

  Mat mt_inv = detail::invert_checked(jac.M_theta, "M_theta");
  Mat uh_inv = detail::invert_checked(jac.U_h, "U_h");

  Mat m = score_rows(spec, d, theta_hat, h_hat);   // n x p
  Mat u = nuisance_rows(spec, d, h_hat);           // n x q

  Mat s_mm = (m.transpose() * m) / n;
  Mat s_uu = (u.transpose() * u) / n;

  // Influence rows lambda_i = m_i - M_h U_h^-1 u_i.
  Mat c = jac.M_h * uh_inv;                        // p x q
  Mat lambda = m - u * c.transpose();              // n x p
  Mat s_ll = (lambda.transpose() * lambda) / n;

  est.Sigma = symmetrize(mt_inv * s_mm * mt_inv.transpose());
  est.Omega = symmetrize(uh_inv * s_uu * uh_inv.transpose());
  est.V = symmetrize(mt_inv * s_ll * mt_inv.transpose());

  // Stacked-system blocks assembled from the same pieces.
  Mat a(p + q, p + q);
  a.topLeftCorner(p, p) = jac.M_theta;
  a.topRightCorner(p, q) = jac.M_h;
  a.bottomLeftCorner(q, p).setZero();
  a.bottomRightCorner(q, q) = jac.U_h;
  Mat rows(n, p + q);
  rows.leftCols(p) = m;
  rows.rightCols(q) = u;
  Mat b = (rows.transpose() * rows) / n;
  Mat a_inv = detail::invert_checked(a, "stacked Jacobian");
  est.Lambda = symmetrize(a_inv * b * a_inv.transpose());
  return est;
}

Mat sandwich_augmented(const EstimandSpec& spec, const Dataset& d, const Vec& eta_hat) {
  if (!spec.has_nuisance()) {
    throw ValidationError("sandwich_augmented requires a spec with a nuisance system");
  }
  const int p = spec.p, q = spec.q_nuis;
  if (static_cast<int>(eta_hat.size()) != p + q) {
    throw ValidationError("eta dimension must be p + q");
  }
  SandwichEstimate est = sandwich_linked(spec, d, eta_hat.head(p), eta_hat.tail(q));
  return est.Lambda;
}

}  // namespace eelink
