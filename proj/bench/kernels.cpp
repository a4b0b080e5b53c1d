// Serial reference paths against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <optional>

#include "torvac/saw.hpp"
#include "torvac/vacancy.hpp"
#include "torvac/walk.hpp"

using namespace torvac;

namespace {

const OccupancyGrid& grid(int N) {
  static std::optional<OccupancyGrid> g32, g64;
  auto& slot = N == 32 ? g32 : g64;
  if (!slot) slot = run_walk(WalkConfig{TorusGeometry(3, N), 1.0, std::nullopt, 1, 0});
  return *slot;
}

void BM_VacancyMask(benchmark::State& st) {
  const auto& g = grid(static_cast<int>(st.range(0)));
  const bool par = st.range(1) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(vacancy_mask(g, g.total_steps(), par));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * g.geometry().cell_count()));
}

void BM_DetectU(benchmark::State& st) {
  const auto& g = grid(static_cast<int>(st.range(0)));
  const auto mask = vacancy_mask(g, g.total_steps());
  const bool par = st.range(1) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(detect_U_mask(g.geometry(), mask, 1.0, par));
}

void BM_LargestBall(benchmark::State& st) {
  const auto& g = grid(static_cast<int>(st.range(0)));
  const auto mask = vacancy_mask(g, g.total_steps());
  const bool par = st.range(1) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(largest_vacant_ball_mask(g.geometry(), mask, par));
}

void BM_GammaAverage(benchmark::State& st) {
  const auto& g = grid(static_cast<int>(st.range(0)));
  const LocalFunctionSpec spec{LocalKind::phi0, 1, {}};
  const bool par = st.range(1) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(gamma_average(g, spec, g.total_steps(), par));
}

void BM_StarSaw(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const bool par = st.range(1) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(par ? star_saw_count(n) : star_saw_count_reference(n));
}

void grid_args(benchmark::internal::Benchmark* b) {
  for (int n : {32, 64})
    for (int par : {0, 1}) b->Args({n, par});
  b->ArgNames({"N", "parallel"})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_VacancyMask)->Apply(grid_args);
BENCHMARK(BM_DetectU)->Apply(grid_args);
BENCHMARK(BM_LargestBall)->Apply(grid_args);
BENCHMARK(BM_GammaAverage)->Apply(grid_args);
BENCHMARK(BM_StarSaw)->Args({9, 0})->Args({9, 1})->ArgNames({"n", "parallel"})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
