/*
 * Copyright 2026 The xairan Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <random>

#include "xairan/explain.hpp"
#include "xairan/fidelity.hpp"
#include "xairan/model.hpp"

namespace xairan {
namespace {

struct Fixture {
  ModelParams params;
  Normalizer norm;
  ExplainInput input;
  ForwardCache cache;
};

Fixture make_fixture(std::size_t hidden) {
  Fixture f;
  f.params = ModelParams::init(kNumFeatures, hidden, 42);
  f.norm = Normalizer::identity(kNumFeatures);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Matrix x(kDefaultWindow, kNumFeatures);
  for (Eigen::Index j = 0; j < x.size(); ++j) x.data()[j] = g(rng);
  f.input = ExplainInput::from_matrix(x, f.norm, BaselineSpec::normalized_zero());
  f.cache = forward(f.params, x, f.norm);
  return f;
}

void BM_Forward(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward(f.params, f.input.input, f.norm));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(64);

void BM_Backward(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(backward(f.params, f.cache));
}
BENCHMARK(BM_Backward)->Arg(16)->Arg(64);

void BM_Attention(benchmark::State& state) {
  const Fixture f = make_fixture(16);
  for (auto _ : state) benchmark::DoNotOptimize(explain_attention(f.cache));
}
BENCHMARK(BM_Attention);

void BM_IntegratedGradients(benchmark::State& state) {
  const Fixture f = make_fixture(16);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(explain_ig(f.params, f.norm, f.input, k));
}
BENCHMARK(BM_IntegratedGradients)->Arg(5)->Arg(64)->Arg(512);

void BM_Hybrid(benchmark::State& state) {
  const Fixture f = make_fixture(16);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        explain_hybrid(f.params, f.norm, f.cache, f.input.baseline, f.input.baseline_id, k));
  }
}
BENCHMARK(BM_Hybrid)->Arg(5)->Arg(64);

void BM_Shap(benchmark::State& state) {
  const Fixture f = make_fixture(16);
  const int m = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(explain_shap(f.params, f.norm, f.input, m, ++seed));
  }
}
BENCHMARK(BM_Shap)->Arg(1)->Arg(16)->Arg(64);

void BM_LocalR2(benchmark::State& state) {
  const Fixture f = make_fixture(16);
  const Attribution a = explain_ig(f.params, f.norm, f.input, 5);
  NeighborhoodConfig cfg;
  cfg.n_samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(local_r2(f.params, f.norm, f.input, a, cfg));
}
BENCHMARK(BM_LocalR2)->Arg(64)->Arg(256);

}  // namespace
}  // namespace xairan

BENCHMARK_MAIN();
