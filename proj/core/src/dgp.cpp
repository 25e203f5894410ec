#include "eelink/dgp.hpp"

#include <cmath>

#include "eelink/errors.hpp"
#include "eelink/estimators.hpp"

namespace eelink {

std::string to_string(DesignKind k) {
  switch (k) {
    case DesignKind::gest6: return "gest6";
    case DesignKind::ipw2: return "ipw2";
  }
  return "?";
}

std::string to_string(Estimand e) {
  switch (e) {
    case Estimand::gest: return "gest";
    case Estimand::ipw: return "ipw";
    case Estimand::att: return "att";
    case Estimand::psreg: return "psreg";
  }
  return "?";
}

DesignSpec DesignSpec::make(DesignKind kind) {
  DesignSpec spec;
  spec.kind = kind;
  spec.theta0 = 3.0;
  if (kind == DesignKind::gest6) {
    spec.q = 6;
    spec.h0.resize(6);
    for (int j = 0; j < 6; ++j) spec.h0[j] = (j + 1) / 16.0;
  } else {
    spec.q = 2;
    spec.h0.resize(2);
    spec.h0[0] = 1.0;
    spec.h0[1] = 0.5;
  }
  return spec;
}

double DesignSpec::asymptotic_variance_ref(Estimand e) const {
  if (kind == DesignKind::gest6) return 22.32;
  return (e == Estimand::att) ? 6.18 : 5.68;
}

Mat ar_covariance(int q, double rho) {
  if (!(std::abs(rho) < 1.0)) throw ValidationError("ar_covariance requires |rho| < 1");
  Mat s(q, q);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) s(i, j) = std::pow(rho, std::abs(i - j));
  }
  return s;
}

double gest_g0(const Vec& x) {
  return x[0] + std::exp(x[1] - 1.0) + std::abs(x[2]) + std::exp(x[3] - 1.0) + std::abs(x[4]) +
         std::abs(x[4] * x[5]);
}

namespace {

constexpr int kMaxGenAttempts = 100;

// Draw order per row is fixed: covariate normals, one uniform for the
// treatment, one normal for the outcome noise.
std::pair<Dataset, TruthBundle> generate(int n, RandomStream& stream, const GenHooks& hooks,
                                         DesignKind kind) {
  if (n < 2) throw ValidationError("design generation requires n >= 2");
  DesignSpec design = DesignSpec::make(kind);
  const int q = design.q;

  Mat chol_lower;
  if (kind == DesignKind::gest6) {
    Eigen::LLT<Mat> llt(ar_covariance(6, 0.8));
    if (llt.info() != Eigen::Success) throw Error("AR covariance failed to factorize");
    chol_lower = llt.matrixL();
  }

  const bool hooked = hooks.zero_noise || hooks.force_z.has_value();
  for (int attempt = 0; attempt < kMaxGenAttempts; ++attempt) {
    Dataset d;
    d.q = q;
    d.rows.resize(n);
    TruthBundle truth;
    truth.theta0 = design.theta0;
    truth.h0 = design.h0;
    truth.e0_values.resize(n);

    PropensityModel true_model{design.h0, false};
    int treated = 0;
    for (int i = 0; i < n; ++i) {
      Observation& o = d.rows[i];
      if (kind == DesignKind::gest6) {
        Vec eps(q);
        for (int j = 0; j < q; ++j) eps[j] = stream.normal();
        o.x = chol_lower * eps;
      } else {
        o.x.resize(2);
        o.x[0] = 0.5 + 0.25 * stream.normal();  // N(1/2, 1/16), sd 1/4
        o.x[1] = 1.0 + 0.5 * stream.normal();   // N(1, 1/4), sd 1/2
      }
      double e0 = propensity(o.x, true_model);
      truth.e0_values[i] = e0;

      double uz = stream.uniform01();
      o.z = hooks.force_z ? *hooks.force_z : (uz < e0 ? 1 : 0);
      treated += o.z;

      double g0 = (kind == DesignKind::gest6) ? gest_g0(o.x) : 2.0 * o.x[0] + o.x[1];
      double noise = hooks.zero_noise ? 0.0 : stream.normal();
      o.y = design.theta0 * o.z + g0 + noise;
    }

    if (hooked) return {std::move(d), std::move(truth)};
    if (treated > 0 && treated < n) return {std::move(d), std::move(truth)};
  }
  throw Error("design generation produced a single-arm sample " +
              std::to_string(kMaxGenAttempts) + " times in a row");
}

}  // namespace

std::pair<Dataset, TruthBundle> gen_gest_design(int n, RandomStream& stream,
                                                const GenHooks& hooks) {
  return generate(n, stream, hooks, DesignKind::gest6);
}

std::pair<Dataset, TruthBundle> gen_ipw_design(int n, RandomStream& stream,
                                               const GenHooks& hooks) {
  return generate(n, stream, hooks, DesignKind::ipw2);
}

std::pair<Dataset, TruthBundle> generate_design(DesignKind kind, int n, RandomStream& stream,
                                                const GenHooks& hooks) {
  return generate(n, stream, hooks, kind);
}

}  // namespace eelink
