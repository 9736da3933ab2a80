// OpenMP kernels against the serial reference loops.
//   OMP_NUM_THREADS=4 ./bench_kernels

#include <random>

#include <benchmark/benchmark.h>

#include "hirpcn/ad/kernels.hpp"

using hirpcn::ad::Matrix;
namespace kernels = hirpcn::ad::kernels;
namespace ref = hirpcn::ad::ref;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (auto& v : m.values()) v = u(rng);
  return m;
}

template <void (*Gemm)(const Matrix&, const Matrix&, Matrix&)>
void bm_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  Matrix c(n, n);
  for (auto _ : state) {
    Gemm(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <void (*Softmax)(const Matrix&, Matrix&)>
void bm_softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_matrix(n, n, 3);
  Matrix y(n, n);
  for (auto _ : state) {
    Softmax(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

}  // namespace

// 32 and 128 are the desk-scale shapes (h and doc rows); 512 shows scaling.
BENCHMARK(bm_gemm<kernels::gemm_nn>)->Name("gemm_nn/omp")->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(bm_gemm<ref::gemm_nn>)->Name("gemm_nn/ref")->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(bm_gemm<kernels::gemm_nt>)->Name("gemm_nt/omp")->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(bm_gemm<ref::gemm_nt>)->Name("gemm_nt/ref")->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(bm_gemm<kernels::gemm_tn>)->Name("gemm_tn/omp")->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(bm_gemm<ref::gemm_tn>)->Name("gemm_tn/ref")->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(bm_softmax<kernels::softmax_rows>)->Name("softmax/omp")->Arg(128)->Arg(1024);
BENCHMARK(bm_softmax<ref::softmax_rows>)->Name("softmax/ref")->Arg(128)->Arg(1024);

BENCHMARK_MAIN();
