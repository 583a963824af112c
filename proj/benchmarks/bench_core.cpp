// Microbenchmarks for the hot paths: histogram construction, Dirichlet
// density evaluation and sampling, the digamma-inversion MLE, and full SAEM
// fitting at census scale.

#include <benchmark/benchmark.h>

#include <vector>

#include "windmix/dirichlet.hpp"
#include "windmix/gof.hpp"
#include "windmix/math.hpp"
#include "windmix/rng.hpp"
#include "windmix/saem.hpp"
#include "windmix/synth.hpp"
#include "windmix/windows.hpp"

using namespace windmix;

namespace {

std::vector<double> random_window(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = 12.0 * rng.uniform();
  return v;
}

MixtureModel bench_model() {
  MixtureModel m;
  m.components = {
      DirichletComponent({24.0, 16.0, 8.0, 4.0, 2.0, 2.0, 2.0, 2.0}),
      DirichletComponent({2.0, 2.0, 4.0, 16.0, 24.0, 8.0, 2.0, 2.0}),
      DirichletComponent({2.0, 2.0, 2.0, 2.0, 4.0, 8.0, 16.0, 24.0})};
  m.weights = {0.6, 0.3, 0.1};
  return m;
}

void BM_BuildHistogram(benchmark::State& state) {
  Rng rng(1);
  const auto samples = random_window(static_cast<std::size_t>(state.range(0)), rng);
  const BinSpec bins = BinSpec::equal_width(0.0, 12.0, 12);
  for (auto _ : state)
    benchmark::DoNotOptimize(build_histogram(samples, bins));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildHistogram)->Arg(600)->Arg(6000);

void BM_LogDensity(benchmark::State& state) {
  Rng rng(2);
  const DirichletComponent c({2.0, 3.0, 4.0, 5.0, 4.0, 3.0, 2.0, 1.5});
  const auto x = sample(c, rng);
  for (auto _ : state) benchmark::DoNotOptimize(log_density(c, x));
}
BENCHMARK(BM_LogDensity);

void BM_DirichletSample(benchmark::State& state) {
  Rng rng(3);
  const DirichletComponent c({2.0, 3.0, 4.0, 5.0, 4.0, 3.0, 2.0, 1.5});
  for (auto _ : state) benchmark::DoNotOptimize(sample(c, rng));
}
BENCHMARK(BM_DirichletSample);

void BM_Digamma(benchmark::State& state) {
  double x = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(math::digamma(x));
    x = x < 1000.0 ? x + 0.1 : 0.1;
  }
}
BENCHMARK(BM_Digamma);

void BM_MleFromStats(benchmark::State& state) {
  const std::vector<double> truth{5.0, 3.0, 2.0, 4.0, 1.0, 2.5, 3.5, 0.8};
  double total = 0.0;
  for (double a : truth) total += a;
  SufficientStats stats;
  stats.weight = 1.0;
  for (double a : truth)
    stats.mean_log.push_back(math::digamma(a) - math::digamma(total));
  const DirichletComponent init(std::vector<double>(truth.size(), 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(mle_from_stats(stats, init));
}
BENCHMARK(BM_MleFromStats);

void BM_Responsibilities(benchmark::State& state) {
  const MixtureModel m = bench_model();
  Rng rng(4);
  const DirichletPopulation pop =
      sample_dirichlet_population(m, static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(responsibilities(m, pop.histograms));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Responsibilities)->Arg(1000)->Arg(10000);

void BM_SaemFit(benchmark::State& state) {
  const MixtureModel m = bench_model();
  Rng rng(5);
  const DirichletPopulation pop =
      sample_dirichlet_population(m, static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) {
    SaemConfig cfg;
    cfg.classes = 3;
    cfg.seed = 9;
    cfg.max_iter = 50;
    benchmark::DoNotOptimize(fit(pop.histograms, cfg));
  }
}
BENCHMARK(BM_SaemFit)->Unit(benchmark::kMillisecond)->Arg(1000)->Arg(5000);

void BM_KsStatistic(benchmark::State& state) {
  Rng rng(6);
  std::vector<double> samples(static_cast<std::size_t>(state.range(0)));
  for (double& v : samples) v = rng.normal();
  for (auto _ : state) {
    auto copy = samples;
    benchmark::DoNotOptimize(
        ks_statistic(std::move(copy), [](double x) { return math::normal_cdf(x); }));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KsStatistic)->Arg(600)->Arg(60000);

}  // namespace

BENCHMARK_MAIN();
