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

#include "tabadv/bench.hpp"

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "tabadv/error.hpp"
#include "test_util.hpp"

namespace tabadv {
namespace {

std::vector<std::pair<double, double>> Curve(const std::vector<double>& asr) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < asr.size(); ++i) out.emplace_back(DefaultEpsilonGrid()[i], asr[i]);
  return out;
}

TEST(PlateauTest, Examples) {
  EXPECT_EQ(PlateauSelect(Curve({0.1, 0.5, 0.9, 0.905, 0.905, 0.91, 0.91}), 0.01), 0.1);
  EXPECT_EQ(PlateauSelect(Curve({0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4}), 0.01), 0.01);
  EXPECT_EQ(PlateauSelect(Curve({0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6}), 0.01), 1.0);
}

TEST(PlateauTest, RejectsBadInput) {
  EXPECT_THROW(PlateauSelect(Curve({0.5}), 0.01), ContractError);
  const std::vector<std::pair<double, double>> unsorted = {{0.3, 0.1}, {0.1, 0.2}};
  EXPECT_THROW(PlateauSelect(unsorted, 0.01), ContractError);
}

TEST(RepresentativeTest, Examples) {
  EXPECT_EQ(RepresentativeEpsilon(std::vector<double>{0.3, 0.3, 0.1, 0.3, 0.5}), 0.3);
  EXPECT_EQ(RepresentativeEpsilon(std::vector<double>{0.3, 0.1, 0.3, 0.1}), 0.1);
  EXPECT_EQ(RepresentativeEpsilon(std::vector<double>{0.05}), 0.05);
  EXPECT_THROW(RepresentativeEpsilon(std::vector<double>{}), ContractError);
}

TEST(QuadrantTest, Examples) {
  const auto th = QuadrantThresholds::Preset();
  EXPECT_EQ(QuadrantClassify(0.9, 0.1, th), Quadrant::kEffImp);
  EXPECT_EQ(QuadrantClassify(0.9, 0.5, th), Quadrant::kEffPer);
  EXPECT_EQ(QuadrantClassify(0.2, 0.1, th), Quadrant::kIneffImp);
  EXPECT_EQ(QuadrantClassify(0.2, 0.5, th), Quadrant::kIneffPer);
  EXPECT_EQ(QuadrantClassify(0.659, 0.181, th), Quadrant::kIneffPer);
  RunRecord r;
  EXPECT_THROW(QuadrantClassify(r, th), ContractError);
}

RunRecord Record(const std::string& dataset, AttackMethod attack, double eps, double asr,
                 double l2, double is) {
  RunRecord r;
  r.dataset = dataset;
  r.model = "lr";
  r.attack = attack;
  r.epsilon = eps;
  r.metrics.asr = asr;
  r.metrics.mean_l2 = l2;
  r.metrics.sparsity_rate = asr;
  r.metrics.mean_sensitivity = 2 * asr;
  r.metrics.outlier_rate = asr / 2;
  r.metrics.is_score = is;
  return r;
}

TEST(ThresholdsTest, FromGaussianBaseline) {
  std::vector<RunRecord> recs = {
      Record("a", AttackMethod::kGaussian, 0.1, 0.2, 0.1, 0.4),
      Record("a", AttackMethod::kGaussian, 0.3, 0.5, 0.2, 0.3),
      Record("a", AttackMethod::kFgsm, 0.1, 0.9, 0.3, 0.01)};
  const auto th = ThresholdsFromBaseline(recs);
  ASSERT_TRUE(th.has_value());
  EXPECT_EQ(th->asr, 0.5);
  EXPECT_EQ(th->is, 0.3);
  recs.erase(recs.begin(), recs.begin() + 2);
  EXPECT_FALSE(ThresholdsFromBaseline(recs).has_value());
}

TEST(CorrelationTest, PerfectAndAnti) {
  std::vector<RunRecord> recs;
  for (int i = 0; i < 5; ++i) {
    const double a = 0.1 * (i + 1);
    recs.push_back(Record("a", AttackMethod::kBim, a, a, 1.0 - a, a));
  }
  const auto table = CorrelationTable(recs);
  ASSERT_EQ(table.size(), 1u);
  EXPECT_EQ(table[0].samples, 5u);
  EXPECT_NEAR(*table[0].r[0], -1.0, 1e-12);
  for (std::size_t k = 1; k < kCorrelatedMetrics.size(); ++k) {
    EXPECT_NEAR(*table[0].r[k], 1.0, 1e-12) << kCorrelatedMetrics[k];
  }
  EXPECT_NEAR(*table[0].average, 0.6, 1e-12);
}

TEST(CorrelationTest, ConstantMetricIsUndefined) {
  std::vector<RunRecord> recs;
  for (int i = 0; i < 3; ++i) {
    auto r = Record("a", AttackMethod::kCw, 0.1 * (i + 1), 0.2 * (i + 1), 0.5, 0.3);
    recs.push_back(r);
  }
  const auto table = CorrelationTable(recs);
  EXPECT_FALSE(table[0].r[0].has_value());
  EXPECT_FALSE(table[0].r[4].has_value());
  EXPECT_TRUE(table[0].r[1].has_value());
}

TEST(AnalyzeTest, SelectionsAndFixedThresholds) {
  std::vector<RunRecord> recs;
  const std::vector<double> asr = {0.1, 0.5, 0.9, 0.905, 0.905, 0.91, 0.91};
  for (std::size_t i = 0; i < asr.size(); ++i) {
    recs.push_back(Record("a", AttackMethod::kFgsm, DefaultEpsilonGrid()[i], asr[i], 0.1, 0.1));
  }
  const auto an = Analyze(recs, 0.01, QuadrantThresholds::Preset());
  ASSERT_EQ(an.plateaus.size(), 1u);
  EXPECT_EQ(an.plateaus[0].epsilon, 0.1);
  EXPECT_EQ(an.representative_epsilon.at(AttackMethod::kFgsm), 0.1);
  EXPECT_FALSE(an.thresholds_from_baseline);
  EXPECT_EQ(an.quadrants.size(), recs.size());
  EXPECT_EQ(an.quadrants[6].quadrant, Quadrant::kEffImp);
  EXPECT_EQ(an.quadrants[0].quadrant, Quadrant::kIneffImp);
}

TEST(RecordsCsvTest, EmptyHasHeader) {
  std::ostringstream out;
  WriteRecordsCsv(std::vector<RunRecord>{}, out);
  EXPECT_EQ(out.str(),
            "dataset,model,attack,epsilon,asr,mean_l2,mean_l1,mean_linf,sparsity_rate,"
            "sparsity_rate_num,sparsity_rate_cat,outlier_rate,mean_sensitivity,is_score\n");
  std::istringstream in(out.str());
  EXPECT_TRUE(ReadRecordsCsv(in).empty());
}

TEST(RecordsCsvTest, RoundTrip) {
  std::vector<RunRecord> recs = {
      Record("bc", AttackMethod::kPgd, 0.3, 0.987654321, 1.0 / 3.0, 0.123456789012345),
      Record("wine", AttackMethod::kCw, 1.0, 0.5, 2e-7, 1e-6)};
  recs[1].metrics.sparsity_rate_num = 0.25;
  recs[1].metrics.sparsity_rate_cat = 0.75;
  recs[1].metrics.mean_l1 = 0.1 + 0.2;
  recs[1].metrics.mean_linf = 1e-300;
  std::ostringstream out;
  WriteRecordsCsv(recs, out);
  std::istringstream in(out.str());
  const auto back = ReadRecordsCsv(in);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].dataset, recs[i].dataset);
    EXPECT_EQ(back[i].attack, recs[i].attack);
    EXPECT_EQ(back[i].epsilon, recs[i].epsilon);
    EXPECT_EQ(back[i].metrics.asr, recs[i].metrics.asr);
    EXPECT_EQ(back[i].metrics.mean_l2, recs[i].metrics.mean_l2);
    EXPECT_EQ(back[i].metrics.mean_l1, recs[i].metrics.mean_l1);
    EXPECT_EQ(back[i].metrics.mean_linf, recs[i].metrics.mean_linf);
    EXPECT_EQ(back[i].metrics.sparsity_rate_num, recs[i].metrics.sparsity_rate_num);
    EXPECT_EQ(back[i].metrics.sparsity_rate_cat, recs[i].metrics.sparsity_rate_cat);
    EXPECT_EQ(back[i].metrics.is_score, recs[i].metrics.is_score);
  }
  std::ostringstream again;
  WriteRecordsCsv(back, again);
  EXPECT_EQ(again.str(), out.str());
}

TEST(RecordsCsvTest, BadHeaderIsParseError) {
  std::istringstream in("dataset,model\nx,y\n");
  EXPECT_THROW(ReadRecordsCsv(in), ParseError);
}

TEST(AverageMetricsTest, Mean) {
  std::vector<MetricRecord> runs(2);
  runs[0].asr = 0.2;
  runs[1].asr = 0.4;
  runs[0].outlier_rate = 1.0;
  const auto avg = AverageMetrics(runs);
  EXPECT_DOUBLE_EQ(avg.asr, 0.3);
  EXPECT_EQ(avg.outlier_rate, 0.5);
  EXPECT_FALSE(avg.is_score.has_value());
}

TEST(ConfigTest, ParsesSections) {
  std::istringstream in(R"(
[run]
seed = 7
eps_grid = [0.3, 0.1]
models = lr
attacks = fgsm, cw
quadrant_thresholds = preset
out = "results dir"

[train]
epochs = 3

[attack]
steps = 20
bim_step_size = 0.05

[dataset.toy]
csv = toy.csv
schema = toy.schema.json
)");
  const auto cfg = ParseRunConfig(in, "/base");
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.eps_grid, (std::vector<double>{0.1, 0.3}));
  ASSERT_EQ(cfg.models.size(), 1u);
  EXPECT_EQ(cfg.models[0].kind, ModelKind::kLogisticRegression);
  EXPECT_EQ(cfg.attacks, (std::vector<AttackMethod>{AttackMethod::kFgsm, AttackMethod::kCw}));
  EXPECT_TRUE(cfg.preset_thresholds);
  EXPECT_EQ(cfg.out_dir, std::filesystem::path("/base/results dir"));
  EXPECT_EQ(cfg.train.epochs, 3u);
  EXPECT_EQ(cfg.attack.steps, 20u);
  ASSERT_EQ(cfg.datasets.size(), 1u);
  EXPECT_EQ(cfg.datasets[0].id, "toy");
  EXPECT_EQ(cfg.datasets[0].csv, std::filesystem::path("/base/toy.csv"));

  const auto bim = cfg.CellAttack(AttackMethod::kBim, 0.3, 2);
  EXPECT_EQ(bim.EffectiveStepSize(), 0.05);
  EXPECT_EQ(bim.seed, cfg.seed + 2);
  EXPECT_EQ(cfg.CellAttack(AttackMethod::kPgd, 0.3, 0).steps, 20u);
}

TEST(ConfigTest, UnknownKeyAndSectionFail) {
  std::istringstream bad_key("[run]\nseeed = 1\n");
  EXPECT_THROW(ParseRunConfig(bad_key, "."), ConfigError);
  std::istringstream bad_section("[model]\nx = 1\n");
  EXPECT_THROW(ParseRunConfig(bad_section, "."), ConfigError);
  EXPECT_THROW(ParseEpsilonList("0.1, abc"), ConfigError);
  EXPECT_THROW(ParseEpsilonList("0.1, -0.2"), ConfigError);
}

TEST(ConfigTest, BundledConfigLoads) {
  const auto cfg = LoadRunConfig(testing::DataDir() / "bench.ini");
  EXPECT_EQ(cfg.datasets.size(), 2u);
  EXPECT_EQ(cfg.eps_grid, DefaultEpsilonGrid());
  EXPECT_EQ(cfg.attacks.size(), 6u);
  EXPECT_EQ(cfg.repetitions, 5u);
  EXPECT_NO_THROW(cfg.Validate());
}

TEST(GridTest, OneCellPerEpsilon) {
  RunConfig cfg;
  cfg.datasets = {testing::BreastCancerConfig()};
  cfg.models = {ModelSpec::LogisticRegression()};
  cfg.attacks = {AttackMethod::kFgsm};
  cfg.repetitions = 1;
  cfg.threads = 1;
  const auto result = RunBenchmark(cfg, false);
  EXPECT_TRUE(result.errors.empty());
  ASSERT_EQ(result.records.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(result.records[i].epsilon, DefaultEpsilonGrid()[i]);
    EXPECT_TRUE(result.records[i].metrics.is_score.has_value());
  }
  ASSERT_EQ(result.models.size(), 1u);
  EXPECT_GT(result.models[0].eligible, 0u);
}

}  // namespace
}  // namespace tabadv
