#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "ssa/kernels.hpp"
#include "ssa/kmeans.hpp"
#include "ssa/rng.hpp"

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  ssa::rng::Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

void BM_CrossprodSerial(benchmark::State& state) {
  auto x = random_matrix(state.range(0), 256, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ssa::kernels::ref::crossprod(x, x));
}

void BM_CrossprodParallel(benchmark::State& state) {
  auto x = random_matrix(state.range(0), 256, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ssa::kernels::crossprod(x, x));
}

void BM_MatmulSerial(benchmark::State& state) {
  auto a = random_matrix(state.range(0), 256, 2);
  auto b = random_matrix(256, 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ssa::kernels::ref::matmul(a, b));
}

void BM_MatmulParallel(benchmark::State& state) {
  auto a = random_matrix(state.range(0), 256, 2);
  auto b = random_matrix(256, 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ssa::kernels::matmul(a, b));
}

void BM_PairwiseSqdistSerial(benchmark::State& state) {
  auto a = random_matrix(state.range(0), 128, 4);
  auto b = random_matrix(state.range(0), 128, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ssa::kernels::ref::pairwise_sqdist(a, b));
}

void BM_PairwiseSqdistParallel(benchmark::State& state) {
  auto a = random_matrix(state.range(0), 128, 4);
  auto b = random_matrix(state.range(0), 128, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ssa::kernels::pairwise_sqdist(a, b));
}

void BM_RbfKernelSerial(benchmark::State& state) {
  auto a = random_matrix(state.range(0), 64, 6);
  for (auto _ : state) benchmark::DoNotOptimize(ssa::kernels::ref::rbf_kernel(a, a, 0.05));
}

void BM_RbfKernelParallel(benchmark::State& state) {
  auto a = random_matrix(state.range(0), 64, 6);
  for (auto _ : state) benchmark::DoNotOptimize(ssa::kernels::rbf_kernel(a, a, 0.05));
}

void BM_KMeans(benchmark::State& state) {
  auto rows = random_matrix(state.range(0), 64, 7);
  for (auto _ : state) benchmark::DoNotOptimize(ssa::kmeans::run(rows, 5, 11));
}

}  // namespace

BENCHMARK(BM_CrossprodSerial)->Arg(512)->Arg(2048);
BENCHMARK(BM_CrossprodParallel)->Arg(512)->Arg(2048);
BENCHMARK(BM_MatmulSerial)->Arg(512)->Arg(2048);
BENCHMARK(BM_MatmulParallel)->Arg(512)->Arg(2048);
BENCHMARK(BM_PairwiseSqdistSerial)->Arg(256)->Arg(1024);
BENCHMARK(BM_PairwiseSqdistParallel)->Arg(256)->Arg(1024);
BENCHMARK(BM_RbfKernelSerial)->Arg(256)->Arg(1024);
BENCHMARK(BM_RbfKernelParallel)->Arg(256)->Arg(1024);
BENCHMARK(BM_KMeans)->Arg(1000);

BENCHMARK_MAIN();
