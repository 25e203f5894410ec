#pragma once

#include <functional>

#include "eelink/estimand.hpp"
#include "eelink/estimators.hpp"
#include "eelink/rng.hpp"
#include "eelink/types.hpp"

namespace eelink {

enum class PluginKind { true_h, freq_logistic, llb_mean };

std::string to_string(PluginKind k);

// How the fixed nuisance estimate of the conventional plug-in engine is
// obtained. h0 must be supplied for true_h; llb_draws applies to
// llb_mean only.
struct PluginMethod {
  PluginKind kind = PluginKind::freq_logistic;
  bool intercept = true;
  int llb_draws = 500;
  Vec h0;
};

struct EngineConfig {
  int B = 500;
  std::uint64_t seed = 0;
  int max_retries = 5;
  double epsilon_overlap = kDefaultOverlapEps;
  std::uint32_t replicate_id = 0;  // namespaces the weight streams
  int workers = 1;                 // draw-level parallelism
};

// Test instrumentation. force_equal_weights replaces every Dirichlet
// draw with the uniform vector, which turns any engine into the
// corresponding frequentist estimator; on_weights observes the weight
// vector consumed by each draw.
struct EngineHooks {
  bool force_equal_weights = false;
  std::function<void(int draw_id, const WeightVector&)> on_weights;
};

// Bayesian bootstrap with the nuisance fixed at a known value: each
// draw solves the weighted target equation at h0.
PosteriorDraws bb_posterior_known_h(const EstimandSpec& spec, const Dataset& d, const Vec& h0,
                                    const EngineConfig& cfg, const EngineHooks& hooks = {});

// Conventional plug-in: compute one nuisance estimate up front (true
// value, unweighted logistic fit, or the mean of a weighted-likelihood
// posterior of h), then run B weighted target solves at that fixed
// value.
PosteriorDraws bb_posterior_plugin(const EstimandSpec& spec, const Dataset& d,
                                   const PluginMethod& plugin, const EngineConfig& cfg,
                                   const EngineHooks& hooks = {});

// Linked engine: each draw fits the nuisance and solves the target
// equation with the same weight vector, and stores both h and theta.
PosteriorDraws bb_posterior_linked(const EstimandSpec& spec, const Dataset& d,
                                   const EngineConfig& cfg, const EngineHooks& hooks = {});

// One-step formulation of the linked engine: each draw solves the
// stacked weighted system sum_i w_i (m; u)(O_i; theta, h) = 0 jointly
// in (theta, h) by Newton iteration on the block-triangular Jacobian.
// Draws agree with the linked engine to solver tolerance.
PosteriorDraws bb_posterior_augmented(const EstimandSpec& spec, const Dataset& d,
                                      const EngineConfig& cfg, const EngineHooks& hooks = {});

// Weighted loss minimization per draw (the loss-likelihood bootstrap).
PosteriorDraws llb_posterior(const WeightedLoss& loss, const Dataset& d,
                             const EngineConfig& cfg, const EngineHooks& hooks = {});

// The fixed nuisance estimate used by bb_posterior_plugin, exposed for
// the study harness and tests.
Vec plugin_nuisance_estimate(const Dataset& d, const PluginMethod& plugin,
                             const EngineConfig& cfg);

}  // namespace eelink
