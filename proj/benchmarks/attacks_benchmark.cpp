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

#include "tabadv/attacks.hpp"
#include "tabadv/models.hpp"

namespace {

struct Fixture {
  tabadv::FeedForwardClassifier model;
  tabadv::EligibleSet set;
};

Fixture MakeFixture(tabadv::ModelSpec spec, std::size_t rows, std::size_t cols) {
  Fixture f{tabadv::FeedForwardClassifier(spec, cols, 1), {}};
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  f.set.x = tabadv::Matrix(rows, cols);
  for (auto& v : f.set.x.data()) v = u(gen);
  f.set.y = f.model.PredictLabels(f.set.x);
  for (std::size_t i = 0; i < rows; ++i) f.set.ids.push_back(i);
  return f;
}

void BM_Attack(benchmark::State& state, tabadv::AttackMethod method) {
  const auto f = MakeFixture(tabadv::ModelSpec::Mlp(), static_cast<std::size_t>(state.range(0)), 30);
  tabadv::AttackSpec spec;
  spec.method = method;
  spec.epsilon = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tabadv::RunAttack(f.model, f.set, spec));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK_CAPTURE(BM_Attack, fgsm, tabadv::AttackMethod::kFgsm)->Arg(128);
BENCHMARK_CAPTURE(BM_Attack, pgd, tabadv::AttackMethod::kPgd)->Arg(128);
BENCHMARK_CAPTURE(BM_Attack, deepfool, tabadv::AttackMethod::kDeepFool)->Arg(128);
BENCHMARK_CAPTURE(BM_Attack, cw, tabadv::AttackMethod::kCw)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_InputGradients(benchmark::State& state) {
  const auto f = MakeFixture(tabadv::ModelSpec::Mlp(), static_cast<std::size_t>(state.range(0)), 30);
  tabadv::Matrix grads;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.model.LossInputGradients(f.set.x, f.set.y, &grads));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_InputGradients)->Arg(1)->Arg(128)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
