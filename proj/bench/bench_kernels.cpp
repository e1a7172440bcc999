// Parallel kernels against their serial references.
//
//   ./kpp_bench --benchmark_filter=Interaction
//
// The *_threads variants set the OpenMP team size from the second argument.

#include "kpp/empirical.hpp"
#include "kpp/spatial_index.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

namespace {

using namespace kpp;

Positions uniform(int dim, std::size_t n, double width, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-width, width);
  Positions p(dim);
  p.coords.resize(n * static_cast<std::size_t>(dim));
  for (double& c : p.coords) c = u(gen);
  return p;
}

// Local-rule density: eps = n^{-1/d} on a box of unit half width.
kernels::RescaledKernel local_kernel(int dim, std::size_t n) {
  return {kernels::Mollifier(dim), std::pow(static_cast<double>(n), -1.0 / dim)};
}

void BM_InteractionCellList(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const int threads = static_cast<int>(state.range(1));
  const auto p = uniform(1, n, 1.0, 1);
  const auto k = local_kernel(1, n);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  for (auto _ : state) {
    const auto grid = spatial::CellGrid::build(p, k.support_radius());
    benchmark::DoNotOptimize(spatial::local_interaction_sums(grid, k, p));
  }
  omp_set_num_threads(saved);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_InteractionCellList)
    ->ArgsProduct({{1000, 10000, 100000}, {1, 4}})
    ->ArgNames({"n", "threads"})
    ->Unit(benchmark::kMillisecond);

void BM_InteractionBruteForce(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = uniform(1, n, 1.0, 1);
  const auto k = local_kernel(1, n);
  for (auto _ : state) benchmark::DoNotOptimize(spatial::local_interaction_sums_reference(k, p));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_InteractionBruteForce)->Arg(1000)->Arg(10000)->ArgName("n")->Unit(benchmark::kMillisecond);

void BM_InteractionCellList2d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = uniform(2, n, 1.0, 2);
  const auto k = local_kernel(2, n);
  for (auto _ : state) {
    const auto grid = spatial::CellGrid::build(p, k.support_radius());
    benchmark::DoNotOptimize(spatial::local_interaction_sums(grid, k, p));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_InteractionCellList2d)->Arg(10000)->Arg(100000)->ArgName("n")->Unit(benchmark::kMillisecond);

particles::ParticleConfiguration configuration(std::size_t n) {
  particles::ModelParameters params;
  params.n_scale = static_cast<std::int64_t>(n);
  return particles::make_configuration(uniform(1, n, 1.0, 3), params);
}

void BM_SmoothDensity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const int threads = static_cast<int>(state.range(1));
  const auto c = configuration(n);
  const kernels::SmoothingBump eta(1, 0.1);
  const auto grid = empirical::default_field_grid(1, 1.0, 1.0, 0.1);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  for (auto _ : state) benchmark::DoNotOptimize(empirical::smooth_density(c, eta, grid));
  omp_set_num_threads(saved);
}
BENCHMARK(BM_SmoothDensity)
    ->ArgsProduct({{1000, 100000}, {1, 4}})
    ->ArgNames({"n", "threads"})
    ->Unit(benchmark::kMillisecond);

void BM_SmoothDensityReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = configuration(n);
  const kernels::SmoothingBump eta(1, 0.1);
  const auto grid = empirical::default_field_grid(1, 1.0, 1.0, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(empirical::smooth_density_reference(c, eta, grid));
}
BENCHMARK(BM_SmoothDensityReference)->Arg(1000)->Arg(10000)->ArgName("n")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
