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

#include "tabadv/models.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "tabadv/error.hpp"
#include "test_util.hpp"

namespace tabadv {
namespace {

using testing::MakeLogistic;

TEST(ModelSpecTest, NamesRoundTrip) {
  EXPECT_EQ(ModelSpec::FromName("lr").Name(), "lr");
  const auto mlp = ModelSpec::FromName("mlp");
  EXPECT_EQ(mlp.hidden, (std::vector<std::size_t>{64, 32}));
  EXPECT_EQ(mlp.dropout_p, 0.2);
  EXPECT_THROW(ModelSpec::FromName("svm"), ConfigError);
}

TEST(ModelTest, LogisticLogit) {
  const auto model = MakeLogistic({1.0, -2.0}, 0.5);
  const std::vector<double> x = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(model.PredictLogit(x), -0.5);
  EXPECT_EQ(model.PredictLabel(x), 0);
}

TEST(ModelTest, ZeroWeightsGiveBias) {
  const auto model = MakeLogistic({0.0, 0.0, 0.0}, 0.7);
  std::mt19937_64 gen(1);
  const auto x = testing::UniformMatrix(gen, 10, 3);
  for (const double z : model.PredictLogits(x)) EXPECT_EQ(z, 0.7);
}

TEST(ModelTest, BatchPreservesOrder) {
  const auto model = MakeLogistic({2.0, 1.0}, -1.0);
  const Matrix x(3, 2, std::vector<double>{0, 0, 1, 0, 0, 1});
  EXPECT_EQ(model.PredictLogits(x), (std::vector<double>{-1.0, 1.0, 0.0}));
  EXPECT_EQ(model.PredictLabels(x), (std::vector<int>{0, 1, 0}));
}

TEST(ModelTest, WrongWidthIsShapeError) {
  const auto model = MakeLogistic({1.0, 1.0}, 0.0);
  EXPECT_THROW(model.PredictLogits(Matrix(1, 3)), ShapeError);
}

TEST(ModelTest, LogisticInputGradientExample) {
  const auto model = MakeLogistic({1.0, -2.0}, 0.5);
  const std::vector<double> x = {1.0, 1.0};
  const auto lg = model.LossAndInputGradient(x, 1);
  EXPECT_NEAR(lg.grad[0], -0.6225, 1e-4);
  EXPECT_NEAR(lg.grad[1], 1.2450, 1e-4);
}

TEST(ModelTest, SaturatedGradientVanishes) {
  const auto model = MakeLogistic({40.0, 40.0}, 0.0);
  const std::vector<double> x = {1.0, 1.0};
  const auto lg = model.LossAndInputGradient(x, 1);
  EXPECT_LT(testing::L2(lg.grad), 1e-20);
}

TEST(ModelTest, MlpInputGradientMatchesFiniteDifferences) {
  FeedForwardClassifier model(ModelSpec::Mlp(), 6, 5);
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = testing::UniformVector(gen, 6);
    const int y = trial % 2;
    const auto lg = model.LossAndInputGradient(x, y);
    const auto f = [&](std::span<const double> v) {
      return model.LossAndInputGradient(v, y).loss;
    };
    EXPECT_LE(diff::FiniteDiffCheck(f, x, lg.grad), 1e-4);
    const auto [z, gz] = model.LogitAndInputGradient(x);
    const auto fz = [&](std::span<const double> v) { return model.PredictLogit(v); };
    EXPECT_EQ(z, model.PredictLogit(x));
    EXPECT_LE(diff::FiniteDiffCheck(fz, x, gz), 1e-4);
  }
}

TEST(ModelTest, ParameterGradientsMatchFiniteDifferences) {
  FeedForwardClassifier model(ModelSpec::Mlp(), 4, 9);
  std::mt19937_64 gen(3);
  const auto x = testing::UniformMatrix(gen, 8, 4);
  const std::vector<int> y = {0, 1, 1, 0, 1, 0, 0, 1};
  std::vector<diff::Tensor> grads;
  model.LossAndParameterGradients(x, y, false, 0, &grads);
  const auto params = model.Parameters();
  ASSERT_EQ(grads.size(), params.size());
  // Spot-check a handful of coordinates in every parameter tensor.
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t k = 0; k < params[p]->size(); k += 1 + params[p]->size() / 7) {
      const double saved = (*params[p])[k];
      const double h = 1e-5;
      (*params[p])[k] = saved + h;
      const double up = model.LossAndParameterGradients(x, y, false, 0, nullptr);
      (*params[p])[k] = saved - h;
      const double down = model.LossAndParameterGradients(x, y, false, 0, nullptr);
      (*params[p])[k] = saved;
      const double central = (up - down) / (2 * h);
      EXPECT_LE(std::abs(central - grads[p][k]) / std::max(1.0, std::abs(central)), 1e-4)
          << "param " << p << " index " << k;
    }
  }
}

TEST(TrainTest, SeparablePointsReachFullAccuracy) {
  const Matrix x(2, 2, std::vector<double>{0.1, 0.2, 0.9, 0.8});
  const std::vector<int> y = {0, 1};
  TrainConfig cfg;
  cfg.epochs = 200;
  const auto model = Train(x, y, ModelSpec::LogisticRegression(), cfg);
  EXPECT_EQ(Accuracy(model, x, y), 1.0);
  EXPECT_EQ(model.training_log().size(), 200u);
}

TEST(TrainTest, DeterministicParameters) {
  std::mt19937_64 gen(4);
  const auto x = testing::UniformMatrix(gen, 64, 5);
  std::vector<int> y;
  for (std::size_t i = 0; i < x.rows(); ++i) y.push_back(x(i, 0) + x(i, 1) > 1.0);
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto a = Train(x, y, ModelSpec::Mlp(), cfg);
  const auto b = Train(x, y, ModelSpec::Mlp(), cfg);
  EXPECT_TRUE(a == b);
  cfg.seed = 43;
  EXPECT_FALSE(a == Train(x, y, ModelSpec::Mlp(), cfg));
}

TEST(TrainTest, NonFiniteLossIsTrainingError) {
  Matrix x(4, 2, std::vector<double>{0, 1, 1, 0, 0.5, 0.5, 0.2, 0.1});
  x(2, 0) = std::numeric_limits<double>::quiet_NaN();
  const std::vector<int> y = {0, 1, 1, 0};
  try {
    Train(x, y, ModelSpec::LogisticRegression(), TrainConfig{});
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(AccuracyTest, CountsAndErrors) {
  const auto model = MakeLogistic({1.0}, -0.5);
  const Matrix x(4, 1, std::vector<double>{0.0, 1.0, 0.2, 0.9});
  EXPECT_EQ(Accuracy(model, x, std::vector<int>{0, 1, 0, 1}), 1.0);
  EXPECT_EQ(Accuracy(model, x, std::vector<int>{0, 1, 1, 0}), 0.5);
  EXPECT_THROW(Accuracy(model, Matrix(0, 1), std::vector<int>{}), ContractError);
}

TEST(CheckpointTest, RoundTripIsExact) {
  FeedForwardClassifier model(ModelSpec::Mlp(), 7, 11);
  std::stringstream first;
  model.Save(first);
  const auto loaded = FeedForwardClassifier::Load(first);
  EXPECT_TRUE(loaded == model);
  std::stringstream a;
  std::stringstream b;
  model.Save(a);
  loaded.Save(b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(CheckpointTest, TruncatedFileFails) {
  FeedForwardClassifier model(ModelSpec::LogisticRegression(), 3, 1);
  std::stringstream out;
  model.Save(out);
  std::stringstream cut(out.str().substr(0, out.str().size() / 2));
  EXPECT_THROW(FeedForwardClassifier::Load(cut), Error);
}

}  // namespace
}  // namespace tabadv
