#include <benchmark/benchmark.h>

#include "spm/ascent.hpp"
#include "spm/experiments.hpp"
#include "spm/subspace.hpp"
#include "spm/tensor.hpp"

using namespace spm;

namespace {

TensorSubspace make_subspace(int d, int k, int m) {
  CounterRng rng(1);
  const ComponentEnsemble e = gen_random_ensemble(d, k, m, rng);
  return extract_subspace(cp_synthesize(e), (m + 1) / 2, RankRule::fixed(k));
}

void BM_Objective(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const TensorSubspace s = make_subspace(d, d * d / 4, 4);
  CounterRng rng(2);
  const Vector x = random_unit_vector(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(objective(s, x));
}
BENCHMARK(BM_Objective)->Arg(10)->Arg(20)->Arg(40);

void BM_SpmStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const TensorSubspace s = make_subspace(d, d * d / 4, 4);
  CounterRng rng(3);
  Vector x = random_unit_vector(d, rng);
  for (auto _ : state) {
    x = spm_step(s, x, 0.25);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_SpmStep)->Arg(10)->Arg(20)->Arg(40);

void BM_ExtractSubspace(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  CounterRng rng(4);
  const ComponentEnsemble e = gen_random_ensemble(d, d, 4, rng);
  const SymTensor t = cp_synthesize(e);
  for (auto _ : state) benchmark::DoNotOptimize(extract_subspace(t, 2, RankRule::fixed(d)).basis().data());
}
BENCHMARK(BM_ExtractSubspace)->Arg(10)->Arg(20);

void BM_Symmetrize(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  CounterRng rng(5);
  DenseTensor t(std::vector<int>(4, d));
  for (Eigen::Index i = 0; i < t.data().size(); ++i) t.data()(i) = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(symmetrize(t).data().data());
}
BENCHMARK(BM_Symmetrize)->Arg(8)->Arg(16);

}  // namespace
BENCHMARK_MAIN();
