// Copyright 2026 The tabadv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "tabadv/metrics.hpp"
#include "tabadv/schema_data.hpp"
#include "tabadv/special_functions.hpp"

namespace {

void BM_Mahalanobis(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  tabadv::Matrix sample(4 * d, d);
  for (auto& v : sample.data()) v = u(gen);
  std::vector<std::size_t> cols(d);
  for (std::size_t j = 0; j < d; ++j) cols[j] = j;
  const auto stats = tabadv::FitStatistics(sample, cols);
  std::vector<double> x(d);
  for (auto& v : x) v = u(gen);
  for (auto _ : state) benchmark::DoNotOptimize(tabadv::MahalanobisSquared(x, stats));
}
BENCHMARK(BM_Mahalanobis)->Arg(8)->Arg(30)->Arg(105);

void BM_Chi2Critical(benchmark::State& state) {
  const auto df = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(tabadv::Chi2Critical(0.05, df));
}
BENCHMARK(BM_Chi2Critical)->Arg(1)->Arg(105);

void BM_HarmonicIs(benchmark::State& state) {
  const std::array<double, 4> c = {0.2, 0.4, 0.6, 0.8};
  for (auto _ : state) benchmark::DoNotOptimize(tabadv::HarmonicIs(c));
}
BENCHMARK(BM_HarmonicIs);

}  // namespace

BENCHMARK_MAIN();
