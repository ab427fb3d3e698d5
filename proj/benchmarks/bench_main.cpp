#include <benchmark/benchmark.h>

#include <boost/random/normal_distribution.hpp>

#include "jtsmc/graph.hpp"
#include "jtsmc/junction_tree.hpp"
#include "jtsmc/kernels.hpp"
#include "jtsmc/models.hpp"
#include "jtsmc/smc.hpp"

using namespace jtsmc;

namespace {

// A tree on vertices 1..m grown by the expander from a fixed stream.
JunctionTree grown_tree(int m, int universe) {
  const ExpanderParams params(0.5, 0.5);
  JunctionTree t = JunctionTree::trivial(universe, VertexId(1));
  for (int v = 2; v <= m; ++v) {
    CounterRng rng = CounterRng::stream(17, v);
    t = expand(t, VertexId(v), params, rng).first;
  }
  return t;
}

Eigen::MatrixXd normal_data(int n, int p) {
  CounterRng rng = CounterRng::stream(3);
  boost::random::normal_distribution<double> normal;
  Eigen::MatrixXd y(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) y(i, j) = normal(rng);
  }
  return y;
}

}  // namespace

static void BM_Expand(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const JunctionTree t = grown_tree(m, m + 1);
  const ExpanderParams params(0.5, 0.5);
  std::uint64_t i = 0;
  for (auto _ : state) {
    CounterRng rng = CounterRng::stream(5, i++);
    benchmark::DoNotOptimize(expand(t, VertexId(m + 1), params, rng));
  }
}
BENCHMARK(BM_Expand)->Arg(8)->Arg(16)->Arg(32);

static void BM_Densities(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const JunctionTree t = grown_tree(m, m + 1);
  const ExpanderParams params(0.5, 0.5);
  CounterRng rng = CounterRng::stream(6);
  const JunctionTree next = expand(t, VertexId(m + 1), params, rng).first;
  for (auto _ : state) {
    benchmark::DoNotOptimize(expander_density(t, next, params));
    benchmark::DoNotOptimize(collapser_density(next, t));
  }
}
BENCHMARK(BM_Densities)->Arg(8)->Arg(16)->Arg(32);

static void BM_Mu(benchmark::State& state) {
  const JunctionTree t = grown_tree(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mu_factorization(t));
}
BENCHMARK(BM_Mu)->Arg(8)->Arg(16)->Arg(32);

static void BM_MuUpdate(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const JunctionTree t = grown_tree(m, m + 1);
  CounterRng rng = CounterRng::stream(7);
  const JunctionTree next = expand(t, VertexId(m + 1), ExpanderParams(0.5, 0.5), rng).first;
  const MuFactorization before = mu_factorization(t);
  for (auto _ : state) benchmark::DoNotOptimize(mu_update(before, t, next));
}
BENCHMARK(BM_MuUpdate)->Arg(8)->Arg(16)->Arg(32);

static void BM_SMCStepUniform(benchmark::State& state) {
  const int p = 10;
  SMCConfig cfg;
  cfg.p = p;
  cfg.particle_count = static_cast<std::size_t>(state.range(0));
  cfg.threads = 1;
  const UniformTarget target(p);
  ParticleSystem sys = init_particles(target, cfg);
  for (int k = 1; k < p / 2; ++k) sys = smc_step(sys, target, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(smc_step(sys, target, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SMCStepUniform)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_SMCStepGGM(benchmark::State& state) {
  const int p = 10;
  SMCConfig cfg;
  cfg.p = p;
  cfg.particle_count = static_cast<std::size_t>(state.range(0));
  cfg.threads = 1;
  const GGMModel model = GGMModel::with_default_prior(normal_data(100, p));
  ParticleSystem sys = init_particles(model, cfg);
  for (int k = 1; k < p / 2; ++k) sys = smc_step(sys, model, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(smc_step(sys, model, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SMCStepGGM)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_CliqueScore(benchmark::State& state) {
  const int p = 30;
  const GGMModel model = GGMModel::with_default_prior(normal_data(100, p));
  const VertexSet c = VertexSet::range(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(model.compute_clique_score(c));
}
BENCHMARK(BM_CliqueScore)->Arg(2)->Arg(8)->Arg(20);
BENCHMARK_MAIN();
