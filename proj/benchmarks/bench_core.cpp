#include <benchmark/benchmark.h>

#include "eelink/dgp.hpp"
#include "eelink/engines.hpp"
#include "eelink/estimators.hpp"
#include "eelink/rng.hpp"
#include "eelink/sandwich.hpp"

using namespace eelink;

namespace {

Dataset make_data(DesignKind kind, int n) {
  RandomStream stream = derive_stream({1234, 0, 0, StreamPurpose::data, 0});
  return generate_design(kind, n, stream).first;
}

void BM_DirichletWeights(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint32_t j = 0;
  for (auto _ : state) {
    RandomStream s = derive_stream({1, 0, ++j, StreamPurpose::weights, 0});
    WeightVector w = sample_dirichlet_uniform(n, s);
    benchmark::DoNotOptimize(w.values().sum());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_DirichletWeights)->Arg(250)->Arg(1000)->Arg(4000);

void BM_WeightedLogisticFit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Dataset d = make_data(DesignKind::gest6, n);
  DesignView dv = DesignView::build(d, true);
  std::uint32_t j = 0;
  for (auto _ : state) {
    RandomStream s = derive_stream({2, 0, ++j, StreamPurpose::weights, 0});
    WeightVector w = sample_dirichlet_uniform(n, s);
    NuisanceFit fit = fit_logistic_weighted(dv.xt, dv.z, w.values());
    benchmark::DoNotOptimize(fit.h.sum());
  }
}
BENCHMARK(BM_WeightedLogisticFit)->Arg(250)->Arg(1000)->Arg(4000);

void BM_LinkedDraw(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Dataset d = make_data(DesignKind::gest6, n);
  EstimandSpec spec = make_gest_spec(d.q, true);
  EngineConfig cfg;
  cfg.B = 1;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = ++seed;
    PosteriorDraws draws = bb_posterior_linked(spec, d, cfg);
    benchmark::DoNotOptimize(draws.theta(0, 0));
  }
}
BENCHMARK(BM_LinkedDraw)->Arg(250)->Arg(1000);

void BM_SandwichLinked(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Dataset d = make_data(DesignKind::gest6, n);
  EstimandSpec spec = make_gest_spec(d.q, true);
  NuisanceFit fit = fit_logistic_weighted(d, equal_weights(n), true);
  PropensityModel model{fit.h, true};
  Vec theta = Vec::Constant(1, g_estimate(d, equal_weights(n), model));
  for (auto _ : state) {
    SandwichEstimate est = sandwich_linked(spec, d, theta, fit.h);
    benchmark::DoNotOptimize(est.V(0, 0));
  }
}
BENCHMARK(BM_SandwichLinked)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
