#include <benchmark/benchmark.h>

#include "fedsim/analysis.hpp"
#include "fedsim/engine.hpp"
#include "fedsim/objective.hpp"

using namespace fedsim;

namespace {

ParamVector random_vec(Rng& rng, std::size_t d) {
  ParamVector v(d);
  for (std::size_t j = 0; j < d; ++j) v[j] = rng.normal();
  return v;
}

void BM_Axpy(benchmark::State& state) {
  Rng rng(1);
  const auto d = static_cast<std::size_t>(state.range(0));
  ParamVector x = random_vec(rng, d), y = random_vec(rng, d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(axpy(0.5, x, y));
  }
}
BENCHMARK(BM_Axpy)->Arg(64)->Arg(1024);

void BM_CosineSim(benchmark::State& state) {
  Rng rng(2);
  const auto d = static_cast<std::size_t>(state.range(0));
  ParamVector a = random_vec(rng, d), b = random_vec(rng, d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cosine_sim(a, b));
  }
}
BENCHMARK(BM_CosineSim)->Arg(64)->Arg(1024);

void BM_QuadraticGradient(benchmark::State& state) {
  auto ensemble = make_quadratic_ensemble(1, 128, 1.0, 10.0, 3, 0.5);
  Rng rng(4);
  ParamVector x = random_vec(rng, 128);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ensemble[0]->stochastic_gradient(x, 1, rng));
  }
}
BENCHMARK(BM_QuadraticGradient);

void BM_LogisticGradient(benchmark::State& state) {
  auto data = std::make_shared<Dataset>(gen_gaussian_mixture(10, 10, 50, 2.0, 5));
  std::vector<std::size_t> rows(data->size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  LogisticObjective obj(data, rows, 10, 1e-3);
  Rng rng(6);
  ParamVector x = random_vec(rng, obj.dim());
  for (auto _ : state) {
    benchmark::DoNotOptimize(obj.stochastic_gradient(x, 20, rng));
  }
}
BENCHMARK(BM_LogisticGradient);

void BM_DirichletPartition(benchmark::State& state) {
  Dataset ds = gen_gaussian_mixture(10, 5, 200, 2.0, 7);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(partition_dirichlet(ds, 20, 0.1, seed++));
  }
}
BENCHMARK(BM_DirichletPartition);

void BM_FedwmsamRound(benchmark::State& state) {
  RunConfig cfg;
  cfg.optimizer.kind = OptimizerKind::fedwmsam;
  cfg.optimizer.local_steps = 5;
  cfg.n_clients = 20;
  cfg.sample_rate = 0.2;
  cfg.rounds = 1;
  cfg.eval_every = 1;
  cfg.objective.kind = ObjectiveSpec::Kind::quadratic;
  cfg.objective.dim = 50;
  cfg.objective.noise_sigma = 0.5;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = seed++;
    benchmark::DoNotOptimize(run(cfg));
  }
}
BENCHMARK(BM_FedwmsamRound);

void BM_SamplingIdentity(benchmark::State& state) {
  Rng rng(8);
  std::vector<ParamVector> vs;
  for (int i = 0; i < 8; ++i) vs.push_back(random_vec(rng, 4));
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_sampling_identity(vs, 4));
  }
}
BENCHMARK(BM_SamplingIdentity);

}  // namespace

BENCHMARK_MAIN();
