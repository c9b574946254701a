#include "jumpsteer/diffusive_sim.hpp"
#include "jumpsteer/direct_detect.hpp"
#include "jumpsteer/jump_sim.hpp"
#include "jumpsteer/seeding.hpp"
#include "jumpsteer/steering.hpp"
#include "jumpsteer/unravelling.hpp"

#include <benchmark/benchmark.h>

using namespace jumpsteer;

static void BM_JumpTrajectory(benchmark::State& state) {
  const MEParams params = MEParams::from_ratio(0.16);
  JumpRunConfig cfg;
  cfg.n_jumps = static_cast<std::uint64_t>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_jumps(params, JumpScheme::adaptive_phi(0.455, 0.0), cfg, seed++));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_JumpTrajectory)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_NoClickStep(benchmark::State& state) {
  const MEParams params = MEParams::from_ratio(0.16);
  const NoClickPropagator prop(no_click_generator(JumpScheme::adaptive_phi(0.455, 0.0), params),
                               default_jump_dt(params));
  Vec4 v(1.0, 0.1, 0.0, -0.5);
  for (auto _ : state) {
    v = prop.step() * v;
    v /= v(0);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_NoClickStep);

static void BM_DiffusiveStep(benchmark::State& state) {
  const MEParams params = MEParams::from_ratio(0.13);
  const double dt = 1e-3;
  const double sq = std::sqrt(dt);
  const auto scheme = static_cast<SdeScheme>(state.range(0));
  Rng rng(3);
  PlanarState s{0.0, -0.77};
  for (auto _ : state) {
    s = diffusive_step(s, params, 0.78, dt, sq * rng.normal(), sq * rng.normal(), scheme);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_DiffusiveStep)->Arg(static_cast<int>(SdeScheme::euler))->Arg(static_cast<int>(SdeScheme::milstein));

static void BM_DiffusiveTrajectory(benchmark::State& state) {
  const MEParams params = MEParams::from_ratio(0.13);
  SDEConfig cfg = SDEConfig::defaults(params);
  cfg.t_total = 200.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_diffusive(params, 0.78, cfg));
    ++cfg.seed;
  }
}
BENCHMARK(BM_DiffusiveTrajectory)->Unit(benchmark::kMillisecond);

static void BM_EzAverage(benchmark::State& state) {
  const MEParams params = MEParams::from_ratio(0.16);
  for (auto _ : state) benchmark::DoNotOptimize(ez_average(params, 0.455));
}
BENCHMARK(BM_EzAverage)->Unit(benchmark::kMicrosecond);

static void BM_DestinationProbabilities(benchmark::State& state) {
  const MEParams params = MEParams::from_ratio(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(jump_destination_probs(params, 0.3));
}
BENCHMARK(BM_DestinationProbabilities)->Unit(benchmark::kMicrosecond);

static void BM_FBound(benchmark::State& state) {
  const Settings n = Settings::finite(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(f_bound(n));
}
BENCHMARK(BM_FBound)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_NoGoCertificate(benchmark::State& state) {
  Rng rng(5);
  std::vector<DiffusiveUnravelling> set;
  for (int i = 0; i < 100; ++i) set.push_back(sample_unravelling(rng, static_cast<std::size_t>(state.range(0)), 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(nogo_certificate(set));
}
BENCHMARK(BM_NoGoCertificate)->Arg(1)->Arg(4)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
