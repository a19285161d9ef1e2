// Copyright 2026 The pstyle Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Parallel kernels against their serial reference twins. On a single core the
// two should be within noise of each other; the gap opens with more threads.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "pstyle/kernels.hpp"

namespace k = pstyle::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Encoder-sized layer: channels in/out from the args, 3x3 over a 34x34 padded map.
k::ConvGeometry geometry(const benchmark::State& state) {
  k::ConvGeometry g;
  g.batch = 1;
  g.in_channels = static_cast<std::size_t>(state.range(0));
  g.out_channels = static_cast<std::size_t>(state.range(1));
  g.in_h = g.in_w = 34;
  g.kernel_h = g.kernel_w = 3;
  return g;
}

template <auto Fn>
void BM_ConvForward(benchmark::State& state) {
  const k::ConvGeometry g = geometry(state);
  const auto in = random_vec(g.batch * g.in_channels * g.in_h * g.in_w, 1);
  const auto w = random_vec(g.out_channels * g.in_channels * 9, 2);
  const auto b = random_vec(g.out_channels, 3);
  std::vector<double> out(g.batch * g.out_channels * g.out_h() * g.out_w());
  for (auto _ : state) {
    Fn(g, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * out.size() * g.in_channels * 9);
}

template <auto Fn>
void BM_ConvBackwardInput(benchmark::State& state) {
  const k::ConvGeometry g = geometry(state);
  const auto go = random_vec(g.batch * g.out_channels * g.out_h() * g.out_w(), 4);
  const auto w = random_vec(g.out_channels * g.in_channels * 9, 5);
  std::vector<double> gi(g.batch * g.in_channels * g.in_h * g.in_w);
  for (auto _ : state) {
    Fn(g, go, w, gi);
    benchmark::DoNotOptimize(gi.data());
  }
}

template <auto Fn>
void BM_ConvBackwardKernel(benchmark::State& state) {
  const k::ConvGeometry g = geometry(state);
  const auto go = random_vec(g.batch * g.out_channels * g.out_h() * g.out_w(), 6);
  const auto in = random_vec(g.batch * g.in_channels * g.in_h * g.in_w, 7);
  std::vector<double> gk(g.out_channels * g.in_channels * 9);
  for (auto _ : state) {
    Fn(g, go, in, gk);
    benchmark::DoNotOptimize(gk.data());
  }
}

template <auto Fn>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vec(n * n, 8), b = random_vec(n * n, 9);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Fn(n, n, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}

void conv_args(benchmark::internal::Benchmark* b) {
  b->Args({16, 32})->Args({32, 48})->Args({48, 48});
}

}  // namespace

BENCHMARK(BM_ConvForward<k::conv2d_forward>)->Apply(conv_args);
BENCHMARK(BM_ConvForward<k::reference::conv2d_forward>)->Apply(conv_args);
BENCHMARK(BM_ConvBackwardInput<k::conv2d_backward_input>)->Apply(conv_args);
BENCHMARK(BM_ConvBackwardInput<k::reference::conv2d_backward_input>)->Apply(conv_args);
BENCHMARK(BM_ConvBackwardKernel<k::conv2d_backward_kernel>)->Apply(conv_args);
BENCHMARK(BM_ConvBackwardKernel<k::reference::conv2d_backward_kernel>)->Apply(conv_args);
BENCHMARK(BM_Matmul<k::matmul>)->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<k::reference::matmul>)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
