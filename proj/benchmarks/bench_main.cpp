#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "snakesim/branching.hpp"
#include "snakesim/brox.hpp"
#include "snakesim/snake.hpp"
#include "snakesim/stats.hpp"

using namespace snakesim;

namespace {

EnvironmentConfig env_config(int n, CovarianceKernel k) {
  EnvironmentConfig c;
  c.n = n;
  c.kernel = k;
  return c;
}

void BM_SnakeSteps(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const bool smooth_kernel = state.range(1) != 0;
  EnvironmentConfig c = env_config(n, smooth_kernel ? CovarianceKernel{SquaredExponentialKernel{1.0, 1.0}}
                                                    : CovarianceKernel{ConstantKernel{1.0}});
  const EnvironmentFactory f(c);
  SnakeConfig sc;
  sc.n = n;
  const std::int64_t steps = 100000;
  std::uint64_t rep = 0;
  for (auto _ : state) {
    auto env = f.make(Rng(1, rep, Rng::kEnvironment));
    Rng r(1, rep++);
    Horizon h;
    h.steps = steps;
    benchmark::DoNotOptimize(run_snake(sc, *env, r, h));
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_SnakeSteps)->Args({100, 0})->Args({100, 1})->Args({1000, 0})->Unit(benchmark::kMillisecond);

void BM_PopulationGenerations(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const bool track = state.range(1) != 0;
  const EnvironmentFactory f(env_config(n, ConstantKernel{1.0}));
  const std::vector<double> root{0.0};
  std::uint64_t rep = 0;
  std::int64_t particle_steps = 0;
  for (auto _ : state) {
    auto env = f.make(Rng(2, rep, Rng::kEnvironment));
    Rng r(2, rep++);
    auto pop = initial_population(n, 1, static_cast<std::size_t>(n), root, track);
    for (int k = 0; k < n && !pop.extinct(); ++k) {
      particle_steps += static_cast<std::int64_t>(pop.particle_count);
      step_population(pop, *env, r);
    }
    benchmark::DoNotOptimize(pop.mass());
  }
  state.SetItemsProcessed(particle_steps);
}
BENCHMARK(BM_PopulationGenerations)->Args({100, 0})->Args({100, 1})->Args({400, 1})->Unit(benchmark::kMillisecond);

void BM_SurvivalOracle(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(exact_survival_geometric({1.0, n, n}));
}
BENCHMARK(BM_SurvivalOracle)->Arg(100)->Arg(10000);

void BM_EmbedRwre(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng er(3);
  const double bound = 0.5 * std::sqrt(static_cast<double>(n));
  const auto profile = build_potential(sample_site_environment(n - 1, 1.0, bound, er), n, 1.0, bound);
  const auto crossings = static_cast<std::int64_t>(n) * n;
  std::uint64_t rep = 0;
  for (auto _ : state) {
    Rng r(3, rep++);
    benchmark::DoNotOptimize(embed_rwre(profile, crossings, r));
  }
  state.SetItemsProcessed(state.iterations() * crossings);
}
BENCHMARK(BM_EmbedRwre)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_KsTwoSample(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  Rng r(4);
  std::vector<double> a(size), b(size);
  for (auto& x : a) x = r.normal();
  for (auto& x : b) x = r.normal();
  for (auto _ : state) benchmark::DoNotOptimize(ks_two_sample(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * size));
}
BENCHMARK(BM_KsTwoSample)->Arg(1000)->Arg(100000);

}  // namespace
BENCHMARK_MAIN();
