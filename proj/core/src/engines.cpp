#include "eelink/engines.hpp"

#include <cmath>
#include <limits>

#include "eelink/errors.hpp"
#include "eelink/parallel.hpp"
#include "linalg.hpp"

namespace eelink {

std::string to_string(PluginKind k) {
  switch (k) {
    case PluginKind::true_h: return "true_h";
    case PluginKind::freq_logistic: return "freq_logistic";
    case PluginKind::llb_mean: return "llb_mean";
  }
  return "?";
}

namespace {

// Closed-form weighted target solves for the built-in estimands; the
// generic Newton handles custom specs. Both routes satisfy the same
// weighted moment equation, which the test suite cross-checks.
Vec solve_builtin_target(EstimandKind kind, const DesignView& dv, const Vec& w, const Vec& e,
                         double eps_overlap) {
  Vec theta;
  switch (kind) {
    case EstimandKind::gest:
      theta.resize(1);
      theta[0] = g_estimate(dv, w, e);
      return theta;
    case EstimandKind::ipw:
      theta.resize(1);
      theta[0] = ipw_estimate(dv, w, e, eps_overlap);
      return theta;
    case EstimandKind::att:
      theta.resize(1);
      theta[0] = att_estimate(dv, w, e, eps_overlap);
      return theta;
    case EstimandKind::psreg: {
      PsRegFit fit = psreg_estimate(dv, w, e);
      theta.resize(2);
      theta[0] = fit.theta;
      theta[1] = fit.phi;
      return theta;
    }
    case EstimandKind::custom:
      break;
  }
  throw ValidationError("no closed-form target solve for custom specs");
}

Vec solve_target(const EstimandSpec& spec, const Dataset& d, const DesignView& dv, const Vec& w,
                 const Vec& h, double eps_overlap) {
  if (spec.kind != EstimandKind::custom) {
    Vec e = propensities(dv.xt, h);
    return solve_builtin_target(spec.kind, dv, w, e, eps_overlap);
  }
  return solve_weighted_ee(spec, d, WeightVector::from(w), h);
}

// Generic Newton on the weighted nuisance score, for custom specs whose
// u is not the logistic one.
Vec solve_weighted_nuisance(const EstimandSpec& spec, const Dataset& d, const Vec& w,
                            const SolveOptions& opts = {}) {
  const int q = spec.q_nuis;
  Vec h = Vec::Zero(q);
  auto score = [&](const Vec& at) {
    Vec g = Vec::Zero(q);
    for (int i = 0; i < d.n(); ++i) g += w[i] * spec.nuisance_score(d.rows[i], at);
    return g;
  };
  auto jac = [&](const Vec& at) {
    if (spec.derivatives && spec.derivatives->du_dh) {
      Mat j = Mat::Zero(q, q);
      for (int i = 0; i < d.n(); ++i) j += w[i] * spec.derivatives->du_dh(d.rows[i], at);
      return j;
    }
    Mat j(q, q);
    for (int k = 0; k < q; ++k) {
      double step = 1e-6 * (1.0 + std::abs(at[k]));
      Vec hp = at, hm = at;
      hp[k] += step;
      hm[k] -= step;
      j.col(k) = (score(hp) - score(hm)) / (2.0 * step);
    }
    return j;
  };

  Vec g = score(h);
  double sup = g.cwiseAbs().maxCoeff();
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (sup <= opts.tol) return h;
    Mat j_inv = detail::invert_checked(jac(h), "nuisance Jacobian");
    Vec delta = -(j_inv * g);
    if (!delta.allFinite()) throw SolverDiverged("nuisance solve: non-finite Newton step");
    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      Vec h_try = h + step * delta;
      Vec g_try = score(h_try);
      double sup_try = g_try.allFinite() ? g_try.cwiseAbs().maxCoeff()
                                         : std::numeric_limits<double>::infinity();
      if (sup_try < sup) {
        h = std::move(h_try);
        g = std::move(g_try);
        sup = sup_try;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) throw SolverDiverged("nuisance solve: step-halving stalled");
  }
  throw SolverDiverged("nuisance solve: no convergence");
}

Vec fit_nuisance(const EstimandSpec& spec, const Dataset& d, const DesignView& dv, const Vec& w) {
  if (spec.kind != EstimandKind::custom) {
    return fit_logistic_weighted(dv.xt, dv.z, w).h;
  }
  return solve_weighted_nuisance(spec, d, w);
}

// Joint Newton on the stacked weighted score in eta = (theta, h). The
// Jacobian is block lower-triangular because u does not involve theta.
std::pair<Vec, Vec> solve_augmented(const EstimandSpec& spec, const Dataset& d, const Vec& w,
                                    const SolveOptions& opts = {}) {
  const int p = spec.p, q = spec.q_nuis;
  Vec theta = Vec::Zero(p), h = Vec::Zero(q);

  auto stacked_score = [&](const Vec& th, const Vec& hh) {
    Vec g = Vec::Zero(p + q);
    for (int i = 0; i < d.n(); ++i) {
      g.head(p) += w[i] * spec.target_score(d.rows[i], th, hh);
      g.tail(q) += w[i] * spec.nuisance_score(d.rows[i], hh);
    }
    return g;
  };

  Vec g = stacked_score(theta, h);
  if (!g.allFinite()) throw SolverDiverged("augmented solve: score non-finite at start");
  double sup = g.cwiseAbs().maxCoeff();

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (sup <= opts.tol) return {theta, h};
    Mat j = Mat::Zero(p + q, p + q);
    if (spec.derivatives && spec.derivatives->dm_dtheta && spec.derivatives->dm_dh &&
        spec.derivatives->du_dh) {
      for (int i = 0; i < d.n(); ++i) {
        j.topLeftCorner(p, p) += w[i] * spec.derivatives->dm_dtheta(d.rows[i], theta, h);
        j.topRightCorner(p, q) += w[i] * spec.derivatives->dm_dh(d.rows[i], theta, h);
        j.bottomRightCorner(q, q) += w[i] * spec.derivatives->du_dh(d.rows[i], h);
      }
    } else {
      Vec eta(p + q);
      eta << theta, h;
      for (int k = 0; k < p + q; ++k) {
        double step = 1e-6 * (1.0 + std::abs(eta[k]));
        Vec ep = eta, em = eta;
        ep[k] += step;
        em[k] -= step;
        j.col(k) = (stacked_score(ep.head(p), ep.tail(q)) -
                    stacked_score(em.head(p), em.tail(q))) /
                   (2.0 * step);
      }
      j.bottomLeftCorner(q, p).setZero();
    }
    Mat j_inv = detail::invert_checked(j, "augmented Jacobian");
    Vec delta = -(j_inv * g);
    if (!delta.allFinite()) throw SolverDiverged("augmented solve: non-finite Newton step");

    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      Vec th_try = theta + step * delta.head(p);
      Vec h_try = h + step * delta.tail(q);
      Vec g_try = stacked_score(th_try, h_try);
      double sup_try = g_try.allFinite() ? g_try.cwiseAbs().maxCoeff()
                                         : std::numeric_limits<double>::infinity();
      if (sup_try < sup) {
        theta = std::move(th_try);
        h = std::move(h_try);
        g = std::move(g_try);
        sup = sup_try;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) throw SolverDiverged("augmented solve: step-halving stalled");
  }
  throw SolverDiverged("augmented solve: no convergence");
}

// Shared engine loop: per-draw substreams, the equal-weight hook, the
// retry-on-failure policy, and order-deterministic assembly.
struct DrawResult {
  Vec theta;
  Vec h;  // empty unless the engine stores nuisance draws
  int retries = 0;
};

PosteriorDraws run_engine(PosteriorMethod method, const Dataset& d, const EngineConfig& cfg,
                          const EngineHooks& hooks, int p, int q_store,
                          const std::function<void(const Vec& w, Vec& theta, Vec& h)>& solve_draw) {
  if (cfg.B < 1) throw ValidationError("EngineConfig.B must be >= 1");
  const int n = d.n();
  std::vector<DrawResult> results(cfg.B);

  auto one_draw = [&](int idx) {
    const std::uint32_t j = static_cast<std::uint32_t>(idx) + 1;  // draw ids are 1-based
    DrawResult& out = results[idx];
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
      WeightVector w = [&] {
        if (hooks.force_equal_weights) return equal_weights(n);
        StreamKey key{cfg.seed, cfg.replicate_id, j,
                      attempt == 0 ? StreamPurpose::weights : StreamPurpose::retry,
                      static_cast<std::uint32_t>(attempt)};
        RandomStream stream = derive_stream(key);
        return sample_dirichlet_uniform(n, stream);
      }();
      if (hooks.on_weights) hooks.on_weights(static_cast<int>(j), w);
      try {
        Vec theta, h;
        solve_draw(w.values(), theta, h);
        if (!theta.allFinite() || (h.size() > 0 && !h.allFinite())) {
          throw SolverDiverged("draw produced non-finite estimates");
        }
        out.theta = std::move(theta);
        out.h = std::move(h);
        out.retries = attempt;
        return;
      } catch (const SolverFailure& err) {
        last_error = err.what();
      }
    }
    throw DrawFailed("draw " + std::to_string(j) + " failed after " +
                     std::to_string(cfg.max_retries) + " retries: " + last_error);
  };

  parallel_for(cfg.B, cfg.workers, one_draw);

  PosteriorDraws draws;
  draws.method = method;
  draws.seed = cfg.seed;
  draws.theta.resize(cfg.B, p);
  if (q_store > 0) draws.h = Mat(cfg.B, q_store);
  for (int idx = 0; idx < cfg.B; ++idx) {
    draws.theta.row(idx) = results[idx].theta.transpose();
    if (q_store > 0) draws.h->row(idx) = results[idx].h.transpose();
    draws.retries_total += results[idx].retries;
  }
  return draws;
}

}  // namespace

PosteriorDraws bb_posterior_known_h(const EstimandSpec& spec, const Dataset& d, const Vec& h0,
                                    const EngineConfig& cfg, const EngineHooks& hooks) {
  ensure_valid(d);
  if (static_cast<int>(h0.size()) != spec.q_nuis) {
    throw ValidationError("h0 dimension " + std::to_string(h0.size()) +
                          " does not match spec nuisance dimension " +
                          std::to_string(spec.q_nuis));
  }
  DesignView dv = DesignView::build(d, spec.intercept);
  const bool builtin = spec.kind != EstimandKind::custom;
  Vec e_fixed;
  if (builtin) e_fixed = propensities(dv.xt, h0);

  auto solve_draw = [&](const Vec& w, Vec& theta, Vec& h_out) {
    theta = builtin ? solve_builtin_target(spec.kind, dv, w, e_fixed, cfg.epsilon_overlap)
                    : solve_weighted_ee(spec, d, WeightVector::from(w), h0);
    (void)h_out;
  };
  return run_engine(PosteriorMethod::known_h, d, cfg, hooks, spec.p, 0, solve_draw);
}

Vec plugin_nuisance_estimate(const Dataset& d, const PluginMethod& plugin,
                             const EngineConfig& cfg) {
  switch (plugin.kind) {
    case PluginKind::true_h:
      if (plugin.h0.size() == 0) throw ValidationError("plugin kind true_h requires h0");
      return plugin.h0;
    case PluginKind::freq_logistic: {
      DesignView dv = DesignView::build(d, plugin.intercept);
      return fit_logistic_weighted(dv.xt, dv.z, Vec::Constant(d.n(), 1.0 / d.n())).h;
    }
    case PluginKind::llb_mean: {
      if (plugin.llb_draws < 1) throw ValidationError("llb_draws must be >= 1");
      DesignView dv = DesignView::build(d, plugin.intercept);
      Vec h_sum = Vec::Zero(dv.k());
      for (int b = 1; b <= plugin.llb_draws; ++b) {
        std::string last_error;
        bool done = false;
        for (int attempt = 0; attempt <= cfg.max_retries && !done; ++attempt) {
          StreamKey key{cfg.seed, cfg.replicate_id, static_cast<std::uint32_t>(b),
                        StreamPurpose::nuisance, static_cast<std::uint32_t>(attempt)};
          RandomStream stream = derive_stream(key);
          WeightVector w = sample_dirichlet_uniform(d.n(), stream);
          try {
            h_sum += fit_logistic_weighted(dv.xt, dv.z, w.values()).h;
            done = true;
          } catch (const SolverFailure& err) {
            last_error = err.what();
          }
        }
        if (!done) {
          throw DrawFailed("plug-in nuisance draw " + std::to_string(b) + " failed after " +
                           std::to_string(cfg.max_retries) + " retries: " + last_error);
        }
      }
      return h_sum / static_cast<double>(plugin.llb_draws);
    }
  }
  throw ValidationError("unknown plugin kind");
}

PosteriorDraws bb_posterior_plugin(const EstimandSpec& spec, const Dataset& d,
                                   const PluginMethod& plugin, const EngineConfig& cfg,
                                   const EngineHooks& hooks) {
  ensure_valid(d);
  if (plugin.kind != PluginKind::true_h && plugin.intercept != spec.intercept) {
    throw ValidationError("plugin intercept flag must match the spec nuisance design");
  }
  Vec h_hat = plugin_nuisance_estimate(d, plugin, cfg);
  if (static_cast<int>(h_hat.size()) != spec.q_nuis) {
    throw ValidationError("plug-in nuisance dimension " + std::to_string(h_hat.size()) +
                          " does not match spec nuisance dimension " +
                          std::to_string(spec.q_nuis));
  }

  DesignView dv = DesignView::build(d, spec.intercept);
  const bool builtin = spec.kind != EstimandKind::custom;
  Vec e_fixed;
  if (builtin) e_fixed = propensities(dv.xt, h_hat);

  auto solve_draw = [&](const Vec& w, Vec& theta, Vec& h_out) {
    theta = builtin ? solve_builtin_target(spec.kind, dv, w, e_fixed, cfg.epsilon_overlap)
                    : solve_weighted_ee(spec, d, WeightVector::from(w), h_hat);
    (void)h_out;
  };
  return run_engine(PosteriorMethod::plugin, d, cfg, hooks, spec.p, 0, solve_draw);
}

PosteriorDraws bb_posterior_linked(const EstimandSpec& spec, const Dataset& d,
                                   const EngineConfig& cfg, const EngineHooks& hooks) {
  ensure_valid(d);
  if (!spec.has_nuisance()) throw ValidationError("linked engine requires a nuisance system");
  DesignView dv = DesignView::build(d, spec.intercept);

  auto solve_draw = [&](const Vec& w, Vec& theta, Vec& h_out) {
    h_out = fit_nuisance(spec, d, dv, w);
    theta = solve_target(spec, d, dv, w, h_out, cfg.epsilon_overlap);
  };
  return run_engine(PosteriorMethod::linked, d, cfg, hooks, spec.p, spec.q_nuis, solve_draw);
}

PosteriorDraws bb_posterior_augmented(const EstimandSpec& spec, const Dataset& d,
                                      const EngineConfig& cfg, const EngineHooks& hooks) {
  ensure_valid(d);
  if (!spec.has_nuisance()) throw ValidationError("augmented engine requires a nuisance system");

  auto solve_draw = [&](const Vec& w, Vec& theta, Vec& h_out) {
    auto [th, hh] = solve_augmented(spec, d, w);
    theta = std::move(th);
    h_out = std::move(hh);
  };
  return run_engine(PosteriorMethod::augmented, d, cfg, hooks, spec.p, spec.q_nuis, solve_draw);
}

PosteriorDraws llb_posterior(const WeightedLoss& loss, const Dataset& d, const EngineConfig& cfg,
                             const EngineHooks& hooks) {
  ensure_valid(d);
  auto solve_draw = [&](const Vec& w, Vec& theta, Vec& h_out) {
    theta = minimize_weighted_loss(loss, d, WeightVector::from(w));
    (void)h_out;
  };
  return run_engine(PosteriorMethod::llb, d, cfg, hooks, loss.dim, 0, solve_draw);
}

}  // namespace eelink
