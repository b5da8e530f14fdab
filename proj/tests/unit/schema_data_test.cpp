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

#include "tabadv/schema_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tabadv/error.hpp"
#include "test_util.hpp"

namespace tabadv {
namespace {

TableSchema TwoColumnSchema() {
  return ParseSchemaManifest(R"({
    "label": "y", "positive_label": "yes",
    "features": [{"name": "a", "kind": "numerical"},
                 {"name": "c", "kind": "categorical"}]})");
}

std::vector<std::size_t> AllRows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

TEST(SchemaManifestTest, ParsesFeaturesAndLabel) {
  const auto schema = TwoColumnSchema();
  ASSERT_EQ(schema.features.size(), 2u);
  EXPECT_EQ(schema.label_name, "y");
  EXPECT_EQ(schema.features[1].kind, FeatureKind::kCategorical);
  EXPECT_EQ(schema.CountKind(FeatureKind::kNumerical), 1u);
  EXPECT_EQ(schema.FeatureIndex("c"), 1u);
  EXPECT_FALSE(schema.FeatureIndex("zzz").has_value());
}

TEST(SchemaManifestTest, RejectsDuplicatesAndBadKinds) {
  EXPECT_THROW(ParseSchemaManifest(R"({"label": "y", "positive_label": "1",
      "features": [{"name": "a", "kind": "numerical"},
                   {"name": "a", "kind": "numerical"}]})"),
               SchemaError);
  EXPECT_THROW(ParseSchemaManifest(R"({"label": "y", "positive_label": "1",
      "features": [{"name": "a", "kind": "ordinal"}]})"),
               SchemaError);
  EXPECT_THROW(ParseSchemaManifest("{not json"), SchemaError);
}

TEST(ParseTableTest, ReadsRowsAndIgnoresExtraColumns) {
  std::istringstream in("id,a,c,y\n1,1.5,red,yes\n2,?,blue,no\n3,2.5,,yes\n");
  const auto t = ParseTable(in, TwoColumnSchema());
  ASSERT_EQ(t.num_rows(), 3u);
  EXPECT_EQ(t.num_features(), 2u);
  EXPECT_EQ(std::get<double>(t.rows[0][0]), 1.5);
  EXPECT_EQ(std::get<std::string>(t.rows[1][1]), "blue");
  EXPECT_TRUE(IsMissing(t.rows[1][0]));
  EXPECT_TRUE(IsMissing(t.rows[2][1]));
  EXPECT_EQ(t.labels, (std::vector<int>{1, 0, 1}));
}

TEST(ParseTableTest, MissingColumnIsSchemaError) {
  std::istringstream in("a,y\n1,yes\n");
  EXPECT_THROW(ParseTable(in, TwoColumnSchema()), SchemaError);
}

TEST(ParseTableTest, ShortRowNamesTheRow) {
  std::istringstream in("a,c,y\n1,red,yes\n2,blue\n");
  try {
    ParseTable(in, TwoColumnSchema());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
}

TEST(ParseTableTest, BadNumberNamesRowAndColumn) {
  std::istringstream in("a,c,y\n1,red,yes\nabc,blue,no\n");
  try {
    ParseTable(in, TwoColumnSchema());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.column(), "a");
  }
}

TEST(ParseTableTest, PositiveAtLeastThreshold) {
  const auto schema = ParseSchemaManifest(R"({"label": "q", "positive_at_least": 6,
      "features": [{"name": "a", "kind": "numerical"}]})");
  std::istringstream in("a,q\n1,5\n2,6\n3,7\n");
  EXPECT_EQ(ParseTable(in, schema).labels, (std::vector<int>{0, 1, 1}));
}

TEST(ImputeTest, MedianAndMode) {
  std::istringstream in("a,c,y\n1,a,yes\n?,a,no\n3,?,yes\n4,b,no\n");
  const auto schema = TwoColumnSchema();
  const auto t = ParseTable(in, schema);
  // Reference rows 0..2 only: median of {1, 3} is 2; mode of {a, a} is a.
  const std::vector<std::size_t> ref = {0, 1, 2};
  const auto out = Impute(t, schema, ref);
  EXPECT_EQ(std::get<double>(out.rows[1][0]), 2.0);
  EXPECT_EQ(std::get<std::string>(out.rows[2][1]), "a");
  EXPECT_EQ(std::get<double>(out.rows[3][0]), 4.0);
}

TEST(ImputeTest, CompleteTableUnchanged) {
  std::istringstream in("a,c,y\n1,a,yes\n2,b,no\n");
  const auto schema = TwoColumnSchema();
  const auto t = ParseTable(in, schema);
  const auto out = Impute(t, schema);
  EXPECT_EQ(out.rows, t.rows);
  EXPECT_EQ(out.labels, t.labels);
}

TEST(ImputeTest, AllMissingIsPreprocessingError) {
  std::istringstream in("a,c,y\n?,a,yes\n?,b,no\n");
  const auto schema = TwoColumnSchema();
  EXPECT_THROW(Impute(ParseTable(in, schema), schema), PreprocessingError);
}

std::vector<int> Labels(std::size_t n, std::size_t positives, std::uint64_t seed) {
  std::vector<int> y(n, 0);
  std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(positives), 1);
  std::mt19937_64 gen(seed);
  std::shuffle(y.begin(), y.end(), gen);
  return y;
}

TEST(SplitTest, LargeTableSizes) {
  const auto y = Labels(32561, 7841, 1);
  const auto s = SplitStratified(y.size(), y, 42);
  EXPECT_EQ(s.train.size(), 22792u);
  EXPECT_EQ(s.val.size(), 3256u);
  EXPECT_EQ(s.test.size(), 6513u);
}

TEST(SplitTest, BundledDatasetSizes) {
  const auto bc = Labels(569, 212, 2);
  const auto s1 = SplitStratified(bc.size(), bc, 42);
  EXPECT_EQ(s1.train.size(), 398u);
  EXPECT_EQ(s1.val.size(), 57u);
  EXPECT_EQ(s1.test.size(), 114u);
  const auto wine = Labels(1599, 855, 3);
  const auto s2 = SplitStratified(wine.size(), wine, 42);
  EXPECT_EQ(s2.train.size(), 1119u);
  EXPECT_EQ(s2.val.size(), 160u);
  EXPECT_EQ(s2.test.size(), 320u);
}

TEST(SplitTest, StratifiedSixtyForty) {
  const auto y = Labels(100, 40, 4);
  const auto s = SplitStratified(y.size(), y, 9);
  const auto positives = [&](const std::vector<std::size_t>& idx) {
    return std::count_if(idx.begin(), idx.end(), [&](auto i) { return y[i] == 1; });
  };
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.val.size(), 10u);
  EXPECT_EQ(s.test.size(), 20u);
  EXPECT_NEAR(positives(s.train), 28, 1);
  EXPECT_NEAR(positives(s.val), 4, 1);
  EXPECT_NEAR(positives(s.test), 8, 1);
}

TEST(SplitTest, PartitionAndDeterminism) {
  const auto y = Labels(237, 90, 5);
  const auto a = SplitStratified(y.size(), y, 11);
  const auto b = SplitStratified(y.size(), y, 11);
  EXPECT_EQ(a, b);
  std::vector<std::size_t> all;
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    EXPECT_TRUE(std::is_sorted(part->begin(), part->end()));
    all.insert(all.end(), part->begin(), part->end());
  }
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, AllRows(y.size()));
  EXPECT_NE(a, SplitStratified(y.size(), y, 12));
}

TEST(SplitTest, TinyClassIsStratificationError) {
  auto y = Labels(50, 2, 6);
  EXPECT_THROW(SplitStratified(y.size(), y, 1), StratificationError);
}

// Eight categorical features with vocabularies 8+16+7+14+6+5+2+41 = 99 and
// six numerical ones.
TEST(FitEncodeTest, AdultLikeDimensions) {
  const std::vector<std::size_t> vocab = {8, 16, 7, 14, 6, 5, 2, 41};
  TableSchema schema;
  schema.label_name = "income";
  schema.positive_label = ">50K";
  for (std::size_t k = 0; k < vocab.size(); ++k) {
    FeatureDescriptor f;
    f.name = "cat" + std::to_string(k);
    f.kind = FeatureKind::kCategorical;
    for (std::size_t v = 0; v < vocab[k]; ++v) f.categories.push_back("v" + std::to_string(v));
    schema.features.push_back(f);
  }
  for (int k = 0; k < 6; ++k) {
    schema.features.push_back({"num" + std::to_string(k), FeatureKind::kNumerical, {}, 0, 0});
  }
  std::mt19937_64 gen(3);
  RawTable table;
  for (const auto& f : schema.features) table.feature_names.push_back(f.name);
  for (int r = 0; r < 400; ++r) {
    std::vector<RawCell> row;
    for (std::size_t k = 0; k < vocab.size(); ++k) {
      row.emplace_back("v" + std::to_string(gen() % vocab[k]));
    }
    for (int k = 0; k < 6; ++k) row.emplace_back(static_cast<double>(gen() % 1000));
    table.rows.push_back(std::move(row));
    table.labels.push_back(static_cast<int>(gen() % 2));
  }
  EXPECT_EQ(schema.CountKind(FeatureKind::kNumerical), 6u);
  EXPECT_EQ(schema.CountKind(FeatureKind::kCategorical), 8u);
  const auto split = SplitStratified(table.num_rows(), table.labels, 42);
  const auto ds = FitEncode(table, schema, split);
  EXPECT_EQ(ds.encoding.d_encoded, 99u);
  EXPECT_EQ(ds.encoding.d_total, 105u);
  EXPECT_NO_THROW(ds.encoding.Validate());
  for (std::size_t r = 0; r < ds.x.rows(); ++r) {
    for (const auto& span : ds.encoding.spans) {
      if (span.kind != FeatureKind::kCategorical) continue;
      double sum = 0.0;
      for (std::size_t c = span.begin; c < span.end; ++c) sum += ds.x(r, c);
      ASSERT_EQ(sum, 1.0);
    }
  }
}

RawTable SmallTable() {
  RawTable t;
  t.feature_names = {"a", "const", "dup", "c"};
  const std::vector<double> a = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19};
  for (std::size_t i = 0; i < a.size(); ++i) {
    t.rows.push_back({a[i], 5.0, a[i], std::string(i % 3 == 0 ? "x" : (i % 3 == 1 ? "y" : "z"))});
    t.labels.push_back(static_cast<int>(i % 2));
  }
  return t;
}

TableSchema SmallSchema() {
  TableSchema s;
  s.label_name = "label";
  s.positive_label = "1";
  s.features = {{"a", FeatureKind::kNumerical, {}, 0, 0},
                {"const", FeatureKind::kNumerical, {}, 0, 0},
                {"dup", FeatureKind::kNumerical, {}, 0, 0},
                {"c", FeatureKind::kCategorical, {}, 0, 0}};
  return s;
}

TEST(FitEncodeTest, DropsConstantAndDuplicateFeatures) {
  const auto t = SmallTable();
  const auto split = SplitStratified(t.num_rows(), t.labels, 1);
  const auto ds = FitEncode(t, SmallSchema(), split);
  ASSERT_EQ(ds.schema.features.size(), 2u);
  EXPECT_EQ(ds.schema.features[0].name, "a");
  EXPECT_EQ(ds.schema.features[1].name, "c");
  EXPECT_EQ(ds.encoding.d_total, 4u);
  EXPECT_EQ(ds.encoding.d_encoded, 3u);
  EXPECT_EQ(ds.encoding.NumericalColumns(), (std::vector<std::size_t>{0}));
}

TEST(FitEncodeTest, ScalesWithTrainingRangeAndClamps) {
  const auto t = SmallTable();
  const auto split = SplitStratified(t.num_rows(), t.labels, 1);
  const auto ds = FitEncode(t, SmallSchema(), split);
  const auto& f = ds.schema.features[0];
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    const double v = std::get<double>(t.rows[r][0]);
    const double expected = std::clamp((v - f.observed_min) / (f.observed_max - f.observed_min), 0.0, 1.0);
    EXPECT_DOUBLE_EQ(ds.x(r, 0), expected);
  }
  for (const auto r : split.train) {
    EXPECT_GE(std::get<double>(t.rows[r][0]), f.observed_min);
    EXPECT_LE(std::get<double>(t.rows[r][0]), f.observed_max);
  }
}

TEST(FitEncodeTest, AllConstantIsPreprocessingError) {
  RawTable t;
  t.feature_names = {"k"};
  for (int i = 0; i < 20; ++i) {
    t.rows.push_back({1.0});
    t.labels.push_back(i % 2);
  }
  TableSchema s;
  s.label_name = "y";
  s.positive_label = "1";
  s.features = {{"k", FeatureKind::kNumerical, {}, 0, 0}};
  const auto split = SplitStratified(t.num_rows(), t.labels, 1);
  EXPECT_THROW(FitEncode(t, s, split), PreprocessingError);
}

TEST(FitEncodeTest, DecodeRoundTrip) {
  const auto t = SmallTable();
  const auto split = SplitStratified(t.num_rows(), t.labels, 1);
  const auto ds = FitEncode(t, SmallSchema(), split);
  for (const auto r : split.train) {
    const auto cells = DecodeRow(ds.x.row(r), ds.schema, ds.encoding);
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_NEAR(std::get<double>(cells[0]), std::get<double>(t.rows[r][0]), 1e-12);
    EXPECT_EQ(std::get<std::string>(cells[1]), std::get<std::string>(t.rows[r][3]));
  }
}

TEST(StatisticsTest, MeanOfTwoPoints) {
  const Matrix m(2, 2, std::vector<double>{0, 0, 1, 1});
  const auto s = FitStatistics(m, {0, 1});
  EXPECT_EQ(s.mu, (std::vector<double>{0.5, 0.5}));
}

TEST(StatisticsTest, CovarianceMatchesDirectComputation) {
  std::mt19937_64 gen(8);
  const auto m = testing::UniformMatrix(gen, 3000, 4);
  const auto s = FitStatistics(m, {0, 1, 2, 3}, 1e-6);
  const std::size_t n = m.rows();
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      double ma = 0.0;
      double mb = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        ma += m(r, a);
        mb += m(r, b);
      }
      ma /= n;
      mb /= n;
      double c = 0.0;
      for (std::size_t r = 0; r < n; ++r) c += (m(r, a) - ma) * (m(r, b) - mb);
      c /= static_cast<double>(n - 1);
      if (a == b) c += 1e-6;
      EXPECT_NEAR(s.sigma_cov(a, b), c, 1e-12);
      if (a != b) {
        EXPECT_LT(std::abs(s.sigma_cov(a, b)), 0.01);
      }
    }
    EXPECT_NEAR(s.sigma_cov(a, a), 1.0 / 12.0, 0.01);
  }
  // L L^T reproduces the covariance.
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      double v = 0.0;
      for (std::size_t k = 0; k < 4; ++k) v += s.cholesky_lower(a, k) * s.cholesky_lower(b, k);
      EXPECT_NEAR(v, s.sigma_cov(a, b), 1e-12);
    }
  }
}

TEST(StatisticsTest, ConstantColumnHitsFloor) {
  const Matrix m(3, 2, std::vector<double>{0.5, 0.0, 0.5, 1.0, 0.5, 0.5});
  const auto s = FitStatistics(m, {0, 1});
  EXPECT_EQ(s.sigma_feat[0], kDefaultSigmaFloor);
  EXPECT_GT(s.sigma_feat[1], 0.1);
}

TEST(StatisticsTest, NeedsTwoRows) {
  const Matrix m(1, 2, std::vector<double>{0.5, 0.5});
  EXPECT_THROW(FitStatistics(m, {0}), StatisticsError);
}

TEST(BundledDataTest, BreastCancerShape) {
  const auto cfg = testing::BreastCancerConfig();
  const auto schema = LoadSchemaManifest(cfg.schema);
  const auto table = LoadTable(cfg.csv, schema);
  EXPECT_EQ(table.num_rows(), 569u);
  EXPECT_EQ(schema.CountKind(FeatureKind::kNumerical), 30u);
  EXPECT_EQ(schema.CountKind(FeatureKind::kCategorical), 0u);
  EXPECT_EQ(std::count(table.labels.begin(), table.labels.end(), 1), 212);
}

TEST(BundledDataTest, WineShape) {
  const auto cfg = testing::WineRedConfig();
  const auto schema = LoadSchemaManifest(cfg.schema);
  const auto table = LoadTable(cfg.csv, schema);
  EXPECT_EQ(table.num_rows(), 1599u);
  EXPECT_EQ(schema.CountKind(FeatureKind::kNumerical), 11u);
}

TEST(EncodedCacheTest, SaveLoadRoundTrip) {
  const auto t = SmallTable();
  const auto split = SplitStratified(t.num_rows(), t.labels, 1);
  const auto ds = FitEncode(t, SmallSchema(), split);
  const auto dir = std::filesystem::temp_directory_path() / "tabadv_encoded_cache_test";
  std::filesystem::remove_all(dir);
  SaveEncodedDataset(ds, dir);
  const auto back = LoadEncodedDataset(dir);
  EXPECT_EQ(back.x, ds.x);
  EXPECT_EQ(back.y, ds.y);
  EXPECT_EQ(back.split, ds.split);
  EXPECT_EQ(back.encoding.spans, ds.encoding.spans);
  EXPECT_EQ(back.encoding.d_total, ds.encoding.d_total);
  EXPECT_EQ(back.schema.features[1].categories, ds.schema.features[1].categories);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace tabadv
