// Serial reference vs OpenMP kernels at the actor-critic's real shapes, plus
// serial vs parallel evaluation throughput.

#include <benchmark/benchmark.h>

#include <vector>

#include "l2map/actor_critic.hpp"
#include "l2map/harness.hpp"
#include "l2map/kernels.hpp"

namespace {

using l2map::kernels::Exec;

constexpr int kSide = 25;

std::vector<double> random_vector(std::size_t n, l2map::Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * l2map::uniform01(rng) - 1.0;
  return v;
}

void BM_DenseForward(benchmark::State& state) {
  const auto exec = static_cast<Exec>(state.range(0));
  const auto sizes = l2map::NetSizes::for_grid(kSide);
  l2map::Rng rng(1);
  const auto w = random_vector(static_cast<std::size_t>(sizes.input) * sizes.hidden, rng);
  const auto b = random_vector(sizes.hidden, rng);
  const auto x = random_vector(sizes.input, rng);
  std::vector<double> y(sizes.hidden);
  for (auto _ : state) {
    l2map::kernels::dense_forward(w, b, x, y, exec);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetLabel(exec == Exec::Serial ? "serial" : "omp");
}

void BM_AccumulateOuter(benchmark::State& state) {
  const auto exec = static_cast<Exec>(state.range(0));
  const auto sizes = l2map::NetSizes::for_grid(kSide);
  constexpr std::size_t kBatch = 20;
  l2map::Rng rng(2);
  std::vector<double> g(static_cast<std::size_t>(sizes.input) * sizes.hidden, 0.0);
  const auto gy = random_vector(kBatch * sizes.hidden, rng);
  const auto x = random_vector(kBatch * sizes.input, rng);
  for (auto _ : state) {
    l2map::kernels::accumulate_outer(g, gy, x, kBatch, exec);
    benchmark::ClobberMemory();
  }
  state.SetLabel(exec == Exec::Serial ? "serial" : "omp");
}

void BM_AdamUpdate(benchmark::State& state) {
  const auto exec = static_cast<Exec>(state.range(0));
  const auto sizes = l2map::NetSizes::for_grid(kSide);
  const std::size_t n = static_cast<std::size_t>(sizes.input) * sizes.hidden;
  l2map::Rng rng(3);
  auto p = random_vector(n, rng);
  const auto g = random_vector(n, rng);
  std::vector<double> m(n, 0.0);
  std::vector<double> v(n, 0.0);
  const l2map::kernels::AdamCoefficients c{1e-4, 0.9, 0.999, 1e-8, 0.1, 0.001};
  for (auto _ : state) {
    l2map::kernels::adam_update(p, g, m, v, c, exec);
    benchmark::ClobberMemory();
  }
  state.SetLabel(exec == Exec::Serial ? "serial" : "omp");
}

void BM_EvaluateMyopic(benchmark::State& state) {
  l2map::RunConfig c;
  c.policy.kind = l2map::PolicyKind::Myopic;
  c.eval.episodes = 8;
  c.eval.workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(l2map::evaluate(c).mean);
  state.SetLabel("workers=" + std::to_string(c.eval.workers));
}

}  // namespace

BENCHMARK(BM_DenseForward)->Arg(static_cast<int>(Exec::Serial))->Arg(static_cast<int>(Exec::Parallel));
BENCHMARK(BM_AccumulateOuter)->Arg(static_cast<int>(Exec::Serial))->Arg(static_cast<int>(Exec::Parallel));
BENCHMARK(BM_AdamUpdate)->Arg(static_cast<int>(Exec::Serial))->Arg(static_cast<int>(Exec::Parallel));
BENCHMARK(BM_EvaluateMyopic)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
