#include <benchmark/benchmark.h>

#include "tadell/dictionary.hpp"
#include "tadell/lifelong.hpp"
#include "tadell/rng.hpp"
#include "tadell/sparse.hpp"

using namespace tadell;

static void BM_Lasso(benchmark::State& state) {
  const Index d = state.range(0);
  const Index k = state.range(1);
  Rng rng(1);
  const Matrix q = rng.normal_matrix(d, k);
  const Vector y = rng.normal_vector(d);
  for (auto _ : state)
    benchmark::DoNotOptimize(lasso(q, y, 0.1));
}
BENCHMARK(BM_Lasso)->Args({16, 8})->Args({64, 8})->Args({75, 10});

static void BM_RecomputeBasis(benchmark::State& state) {
  const Index p = state.range(0);
  const Index k = state.range(1);
  Rng rng(2);
  Accumulator acc(k, p);
  for (int t = 0; t < 20; ++t) {
    const Matrix g = rng.normal_matrix(p, p);
    accumulate(acc, rng.normal_vector(k), rng.normal_vector(p),
               g * g.transpose() / static_cast<double>(p), +1);
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(recompute_basis(acc, 20, 0.01));
}
BENCHMARK(BM_RecomputeBasis)->Args({8, 6})->Args({24, 8})->Args({51, 10});

static void BM_Encounter(benchmark::State& state) {
  const Index d = state.range(0);
  const Index d_m = d;
  Rng rng(3);
  Hyper hyper;
  hyper.k = state.range(1);
  LearnerState learner = make_learner(Mode::tadell, hyper, d, d_m, 4);

  TaskSpec task;
  task.id = 0;
  task.domain = Domain::synth1;
  task.descriptor_raw = rng.normal_vector(d_m);
  task.params = Synth1Params{task.descriptor_raw};

  SingleTaskSolution sol;
  sol.alpha = rng.normal_vector(d);
  const Matrix g = rng.normal_matrix(d, d);
  sol.gamma = g * g.transpose() / static_cast<double>(d);

  for (auto _ : state) {
    tadell_encounter(learner, task, sol);
    benchmark::DoNotOptimize(learner.dict.L);
  }
}
BENCHMARK(BM_Encounter)->Args({8, 6})->Args({16, 8})->Args({24, 8});

static void BM_ZeroShot(benchmark::State& state) {
  Rng rng(5);
  CoupledDictionary dict = init_dictionary(24, 24, state.range(0), 6);
  const Vector phi = rng.normal_vector(24);
  for (auto _ : state)
    benchmark::DoNotOptimize(zero_shot(dict, phi, 0.1));
}
BENCHMARK(BM_ZeroShot)->Arg(6)->Arg(12);

BENCHMARK_MAIN();
