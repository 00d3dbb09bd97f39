// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#include <benchmark/benchmark.h>

#include "absgn/loss.hpp"
#include "absgn/network.hpp"

using namespace absgn;

namespace {

Tensor<float> random_image(const Shape& s, uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t(s);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = float(rng.uniform());
  return t;
}

void BM_Dwt2(benchmark::State& state) {
  Tensor<float> x = random_image({1, 32, 256, 256}, 1);
  for (auto _ : state) {
    Tensor<float> s = dwt2_tensor(x);
    benchmark::DoNotOptimize(s.data());
  }
}
BENCHMARK(BM_Dwt2)->Unit(benchmark::kMillisecond);

void BM_Idwt2(benchmark::State& state) {
  Tensor<float> s = dwt2_tensor(random_image({1, 32, 256, 256}, 2));
  for (auto _ : state) {
    Tensor<float> x = idwt2_tensor(s);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_Idwt2)->Unit(benchmark::kMillisecond);

void BM_Conv3x3(benchmark::State& state) {
  const int c = int(state.range(0));
  ParamStore<float> store;
  Rng rng(3);
  ConvPRelu<float> conv(store, "c", {c, c, 3, 1, true}, rng);
  Var<float> x(random_image({1, c, 128, 128}, 4));
  NoGradGuard ng;
  for (auto _ : state) {
    Var<float> y = conv.forward(x);
    benchmark::DoNotOptimize(y.value().data());
  }
}
BENCHMARK(BM_Conv3x3)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_MgdbForward(benchmark::State& state) {
  ParamStore<float> store;
  Rng rng(5);
  MgdbConfig cfg;
  cfg.channels = 32;
  MgdbBlock<float> block(store, "m", cfg, rng);
  Var<float> x(random_image({1, 32, 128, 128}, 6));
  NoGradGuard ng;
  for (auto _ : state) {
    Var<float> y = block.forward(x);
    benchmark::DoNotOptimize(y.value().data());
  }
}
BENCHMARK(BM_MgdbForward)->Unit(benchmark::kMillisecond);

void BM_SsimLoss(benchmark::State& state) {
  Var<float> a(random_image({1, 3, 256, 256}, 7));
  Var<float> b(random_image({1, 3, 256, 256}, 8));
  NoGradGuard ng;
  for (auto _ : state) {
    Var<float> l = ssim_loss(a, b);
    benchmark::DoNotOptimize(l.value().data());
  }
}
BENCHMARK(BM_SsimLoss)->Unit(benchmark::kMillisecond);

void BM_NetworkEnhance(benchmark::State& state) {
  NetworkConfig cfg;
  cfg.base_channels = int(state.range(0));
  Network<float> net(cfg, 9);
  Tensor<float> img = random_image({1, 3, 256, 256}, 10);
  for (auto _ : state) {
    Tensor<float> out = net.enhance(img);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_NetworkEnhance)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  NetworkConfig cfg;
  cfg.base_channels = 8;
  Network<float> net(cfg, 11);
  Var<float> input(random_image({1, 3, 64, 64}, 12));
  Var<float> target(random_image({1, 3, 64, 64}, 13));
  for (auto _ : state) {
    net.params().zero_grads();
    Var<float> out = net.forward(input, true);
    Var<float> loss = total_loss(out, target);
    backward(loss);
    benchmark::DoNotOptimize(loss.value().data());
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
