// Serial reference loop against the OpenMP kernel for the hot operators.
// Run with --benchmark_filter=... ; set OMP_NUM_THREADS to vary the team.

#include <cmath>

#include <benchmark/benchmark.h>

#include "fracvar/variational.hpp"

using namespace fracvar;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(1) == 0 ? Exec::serial : Exec::parallel; }

GridFunction smooth(std::size_t n) {
  return interpolate([](double x) { return (1 - x) * std::exp(std::sin(3 * x)); }, build_mesh(1.0, n));
}

void BM_assemble_fractional(benchmark::State& state) {
  const P1Space space(build_mesh(1.0, static_cast<std::size_t>(state.range(0)), {Grading::graded, 2.0}));
  const CoefficientField c = CoefficientField::constant(1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_fractional(space, c, FractionalOrder(0.5), 2, exec_of(state)));
}

void BM_kipriyanov_left(benchmark::State& state) {
  const GridFunction f = smooth(static_cast<std::size_t>(state.range(0)));
  const KipriyanovSpec spec(FractionalOrder(0.5), 3);
  for (auto _ : state) benchmark::DoNotOptimize(kipriyanov_left(f, spec, exec_of(state)));
}

void BM_marchaud_truncated_right(benchmark::State& state) {
  const GridFunction f = smooth(static_cast<std::size_t>(state.range(0)));
  const TruncationEpsilon eps(1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(marchaud_truncated_right(f, FractionalOrder(0.5), eps, exec_of(state)));
}

void BM_fractional_integral_right(benchmark::State& state) {
  const GridFunction f = smooth(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fractional_integral_right(f, FractionalOrder(0.5), exec_of(state)));
}

}  // namespace

// Second argument: 0 = serial reference, 1 = OpenMP.
BENCHMARK(BM_assemble_fractional)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kipriyanov_left)->ArgsProduct({{1024, 4096}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_marchaud_truncated_right)->ArgsProduct({{1024, 4096}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fractional_integral_right)->ArgsProduct({{1024, 4096}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
