#include "eelink/estimand.hpp"

#include "eelink/errors.hpp"
#include "eelink/estimators.hpp"

namespace eelink {

std::string to_string(EstimandKind k) {
  switch (k) {
    case EstimandKind::gest: return "gest";
    case EstimandKind::ipw: return "ipw";
    case EstimandKind::att: return "att";
    case EstimandKind::psreg: return "psreg";
    case EstimandKind::custom: return "custom";
  }
  return "?";
}

Vec augmented_x(const Observation& o, bool intercept) {
  if (!intercept) return o.x;
  Vec xt(o.x.size() + 1);
  xt[0] = 1.0;
  xt.tail(o.x.size()) = o.x;
  return xt;
}

namespace {

double propensity_at(const Observation& o, const Vec& h, bool intercept) {
  if (intercept) {
    double t = h[0];
    for (int j = 0; j < o.x.size(); ++j) t += h[j + 1] * o.x[j];
    return expit(t);
  }
  return expit(h.dot(o.x));
}

// Shared logistic nuisance pieces: u = x~ (z - e), du/dh' = -x~ x~' e(1-e).
void attach_nuisance(EstimandSpec& spec, int q, bool intercept) {
  spec.q_nuis = q + (intercept ? 1 : 0);
  spec.intercept = intercept;
  spec.nuisance_score = [intercept](const Observation& o, const Vec& h) -> Vec {
    double e = propensity_at(o, h, intercept);
    return augmented_x(o, intercept) * (o.z - e);
  };
}

Mat logistic_du_dh(const Observation& o, const Vec& h, bool intercept) {
  double e = propensity_at(o, h, intercept);
  Vec xt = augmented_x(o, intercept);
  return -(e * (1.0 - e)) * (xt * xt.transpose());
}

}  // namespace

EstimandSpec make_gest_spec(int q, bool intercept) {
  EstimandSpec spec;
  spec.kind = EstimandKind::gest;
  spec.p = 1;
  attach_nuisance(spec, q, intercept);
  spec.target_score = [intercept](const Observation& o, const Vec& th, const Vec& h) -> Vec {
    double e = propensity_at(o, h, intercept);
    Vec m(1);
    m[0] = (o.y - th[0] * o.z) * (o.z - e);
    return m;
  };
  ScoreDerivatives der;
  der.dm_dtheta = [intercept](const Observation& o, const Vec&, const Vec& h) -> Mat {
    double e = propensity_at(o, h, intercept);
    Mat d(1, 1);
    d(0, 0) = -o.z * (o.z - e);
    return d;
  };
  der.dm_dh = [intercept](const Observation& o, const Vec& th, const Vec& h) -> Mat {
    double e = propensity_at(o, h, intercept);
    Vec xt = augmented_x(o, intercept);
    return (-(o.y - th[0] * o.z) * e * (1.0 - e)) * xt.transpose();
  };
  der.du_dh = [intercept](const Observation& o, const Vec& h) -> Mat {
    return logistic_du_dh(o, h, intercept);
  };
  spec.derivatives = std::move(der);
  return spec;
}

EstimandSpec make_ipw_spec(int q, bool intercept) {
  EstimandSpec spec;
  spec.kind = EstimandKind::ipw;
  spec.p = 1;
  attach_nuisance(spec, q, intercept);
  spec.target_score = [intercept](const Observation& o, const Vec& th, const Vec& h) -> Vec {
    double e = propensity_at(o, h, intercept);
    Vec m(1);
    m[0] = th[0] - o.z * o.y / e + (1.0 - o.z) * o.y / (1.0 - e);
    return m;
  };
  ScoreDerivatives der;
  der.dm_dtheta = [](const Observation&, const Vec&, const Vec&) -> Mat {
    return Mat::Identity(1, 1);
  };
  der.dm_dh = [intercept](const Observation& o, const Vec&, const Vec& h) -> Mat {
    double e = propensity_at(o, h, intercept);
    Vec xt = augmented_x(o, intercept);
    double factor = o.z * o.y * (1.0 - e) / e + (1.0 - o.z) * o.y * e / (1.0 - e);
    return factor * xt.transpose();
  };
  der.du_dh = [intercept](const Observation& o, const Vec& h) -> Mat {
    return logistic_du_dh(o, h, intercept);
  };
  spec.derivatives = std::move(der);
  return spec;
}

EstimandSpec make_att_spec(int q, bool intercept) {
  EstimandSpec spec;
  spec.kind = EstimandKind::att;
  spec.p = 1;
  attach_nuisance(spec, q, intercept);
  spec.target_score = [intercept](const Observation& o, const Vec& th, const Vec& h) -> Vec {
    double e = propensity_at(o, h, intercept);
    Vec m(1);
    m[0] = o.z * o.y - o.y * (1.0 - o.z) * e / (1.0 - e) - th[0] * o.z;
    return m;
  };
  ScoreDerivatives der;
  der.dm_dtheta = [](const Observation& o, const Vec&, const Vec&) -> Mat {
    Mat d(1, 1);
    d(0, 0) = -static_cast<double>(o.z);
    return d;
  };
  der.dm_dh = [intercept](const Observation& o, const Vec&, const Vec& h) -> Mat {
    double e = propensity_at(o, h, intercept);
    Vec xt = augmented_x(o, intercept);
    return (-o.y * (1.0 - o.z) * e / (1.0 - e)) * xt.transpose();
  };
  der.du_dh = [intercept](const Observation& o, const Vec& h) -> Mat {
    return logistic_du_dh(o, h, intercept);
  };
  spec.derivatives = std::move(der);
  return spec;
}

EstimandSpec make_psreg_spec(int q, bool intercept) {
  EstimandSpec spec;
  spec.kind = EstimandKind::psreg;
  spec.p = 2;
  attach_nuisance(spec, q, intercept);
  spec.target_score = [intercept](const Observation& o, const Vec& th, const Vec& h) -> Vec {
    double e = propensity_at(o, h, intercept);
    double resid = o.y - th[0] * o.z - th[1] * e;
    Vec m(2);
    m[0] = resid * o.z;
    m[1] = resid * e;
    return m;
  };
  ScoreDerivatives der;
  der.dm_dtheta = [intercept](const Observation& o, const Vec&, const Vec& h) -> Mat {
    double e = propensity_at(o, h, intercept);
    Mat d(2, 2);
    d(0, 0) = -o.z * o.z;
    d(0, 1) = -e * o.z;
    d(1, 0) = -o.z * e;
    d(1, 1) = -e * e;
    return d;
  };
  der.dm_dh = [intercept](const Observation& o, const Vec& th, const Vec& h) -> Mat {
    double e = propensity_at(o, h, intercept);
    Vec xt = augmented_x(o, intercept);
    double resid = o.y - th[0] * o.z - th[1] * e;
    Mat d(2, xt.size());
    d.row(0) = (-th[1] * o.z * e * (1.0 - e)) * xt.transpose();
    d.row(1) = ((resid - th[1] * e) * e * (1.0 - e)) * xt.transpose();
    return d;
  };
  der.du_dh = [intercept](const Observation& o, const Vec& h) -> Mat {
    return logistic_du_dh(o, h, intercept);
  };
  spec.derivatives = std::move(der);
  return spec;
}

EstimandSpec make_mean_spec() {
  EstimandSpec spec;
  spec.kind = EstimandKind::custom;
  spec.p = 1;
  spec.q_nuis = 0;
  spec.target_score = [](const Observation& o, const Vec& th, const Vec&) -> Vec {
    Vec m(1);
    m[0] = o.y - th[0];
    return m;
  };
  ScoreDerivatives der;
  der.dm_dtheta = [](const Observation&, const Vec&, const Vec&) -> Mat {
    return -Mat::Identity(1, 1);
  };
  spec.derivatives = std::move(der);
  return spec;
}

}  // namespace eelink
