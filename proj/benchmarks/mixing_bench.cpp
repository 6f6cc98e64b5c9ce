#include <benchmark/benchmark.h>

#include "mixstat/decompose.hpp"
#include "mixstat/mixing.hpp"

namespace {

mixstat::FiniteMarkovChain random_chain(int s) {
  mixstat::CounterRng rng(mixstat::StreamKey{5, 0, static_cast<std::uint64_t>(s)});
  return mixstat::FiniteMarkovChain::random(s, rng);
}

void BM_AlphaExact(benchmark::State& state) {
  const auto chain = random_chain(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mixstat::alpha_coeff(chain, 3));
}
BENCHMARK(BM_AlphaExact)->DenseRange(4, 12, 4);

void BM_ConditionalPhi(benchmark::State& state) {
  const auto chain = random_chain(3);
  const std::vector<mixstat::Conditioning> cond{{0, 1}};
  for (auto _ : state)
    benchmark::DoNotOptimize(mixstat::conditional_phi_coeff(chain, cond, 2, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ConditionalPhi)->DenseRange(1, 5, 2);

void BM_DecomposeOrder3(benchmark::State& state) {
  const auto chain = random_chain(3);
  const auto kernel = mixstat::KernelSpec::bounded_custom(
      3, 3, [](std::span<const int> x) { return (x[0] == x[2]) - 0.5 * (x[1] == 1); });
  const mixstat::ProcessSpec spec{mixstat::MarkovChainProcess{chain, std::nullopt}, 1};
  const auto path = mixstat::generate(spec, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mixstat::decompose(path, chain, kernel));
}
BENCHMARK(BM_DecomposeOrder3)->Arg(20)->Arg(40);

}  // namespace
