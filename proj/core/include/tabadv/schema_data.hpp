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

// Tabular ingestion: CSV loading, imputation, stratified splitting, one-hot
// encoding with min-max scaling, and the distribution statistics (mean,
// ridge covariance, per-feature spread) that the deviation and sensitivity
// metrics are measured against.

#ifndef TABADV_SCHEMA_DATA_HPP_
#define TABADV_SCHEMA_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tabadv/matrix.hpp"

namespace tabadv {

enum class FeatureKind { kNumerical, kCategorical };

const char* FeatureKindName(FeatureKind kind);

struct FeatureDescriptor {
  std::string name;
  FeatureKind kind = FeatureKind::kNumerical;
  // Category vocabulary, in encoding order. Categorical features only.
  std::vector<std::string> categories;
  // Training-split range. Numerical features only; filled by FitEncode.
  double observed_min = 0.0;
  double observed_max = 0.0;
};

struct TableSchema {
  std::vector<FeatureDescriptor> features;
  std::string label_name;
  // A row is positive when its label cell equals `positive_label`, or, when
  // `positive_at_least` is set, when the label parses to a number >= it.
  std::string positive_label;
  std::optional<double> positive_at_least;
  std::vector<std::string> missing_markers = {"", "?"};
  char delimiter = ',';

  // Throws SchemaError on duplicate names or a label listed as a feature.
  void Validate() const;
  std::optional<std::size_t> FeatureIndex(const std::string& name) const;
  std::size_t CountKind(FeatureKind kind) const;
};

// Parses a JSON schema manifest:
//   {"label": "...", "positive_label": "...", "positive_at_least": 6,
//    "missing_markers": ["", "?"], "delimiter": ",",
//    "features": [{"name": "age", "kind": "numerical"},
//                 {"name": "sex", "kind": "categorical",
//                  "categories": ["F", "M"]}]}
TableSchema ParseSchemaManifest(const std::string& json_text);
TableSchema LoadSchemaManifest(const std::filesystem::path& path);

// A cell is missing, a parsed number (numerical features) or a trimmed
// string (categorical features).
using RawCell = std::variant<std::monostate, double, std::string>;

inline bool IsMissing(const RawCell& cell) {
  return std::holds_alternative<std::monostate>(cell);
}

struct RawTable {
  std::vector<std::string> feature_names;  // schema feature order
  std::vector<std::vector<RawCell>> rows;  // row-major
  std::vector<int> labels;                 // 1 = positive class

  std::size_t num_rows() const noexcept { return rows.size(); }
  std::size_t num_features() const noexcept { return feature_names.size(); }
};

// Reads a headered CSV. Columns not named by the schema are ignored.
RawTable LoadTable(const std::filesystem::path& path, const TableSchema& schema);
RawTable ParseTable(std::istream& in, const TableSchema& schema,
                    const std::string& source_name = "<stream>");

// Fills numerical gaps with the median and categorical gaps with the mode,
// both computed over `reference_rows` (all rows when empty). Mode ties go to
// the lexicographically smallest label.
RawTable Impute(const RawTable& table, const TableSchema& schema,
                std::span<const std::size_t> reference_rows = {});

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  std::size_t total() const noexcept {
    return train.size() + val.size() + test.size();
  }
  friend bool operator==(const SplitIndices&, const SplitIndices&) = default;
};

// 70/10/20 stratified split. The test share is taken first (ceil(n/5)), then
// the validation share from the remainder (ceil(rest/8)); per-class counts
// follow largest-remainder allocation so each split is within one instance
// of the stratified target. Index lists are returned sorted.
SplitIndices SplitStratified(std::size_t n, std::span<const int> labels,
                             std::uint64_t seed);

struct FeatureSpan {
  std::size_t feature = 0;  // index into the encoded schema's features
  FeatureKind kind = FeatureKind::kNumerical;
  std::size_t begin = 0;  // first encoded column
  std::size_t end = 0;    // one past the last encoded column

  std::size_t width() const noexcept { return end - begin; }
  friend bool operator==(const FeatureSpan&, const FeatureSpan&) = default;
};

struct EncodingMap {
  std::vector<FeatureSpan> spans;
  std::size_t d_encoded = 0;  // one-hot columns
  std::size_t d_total = 0;

  std::vector<std::size_t> NumericalColumns() const;
  std::vector<FeatureKind> ColumnKinds() const;
  std::size_t CountKind(FeatureKind kind) const;
  // Throws SchemaError unless spans are contiguous, disjoint and cover
  // [0, d_total).
  void Validate() const;
};

struct EncodedDataset {
  Matrix x;  // n x d_total, entries in [0, 1]
  std::vector<int> y;
  SplitIndices split;
  TableSchema schema;  // surviving features with fitted ranges/vocabularies
  EncodingMap encoding;

  Matrix Rows(std::span<const std::size_t> indices) const {
    return x.SelectRows(indices);
  }
  std::vector<int> Labels(std::span<const std::size_t> indices) const;
};

// Drops constant and duplicate features (exact equality on the training
// split), expands categoricals one-hot and min-max scales numericals with
// training ranges, clamping validation/test values to [0, 1].
EncodedDataset FitEncode(const RawTable& table, const TableSchema& schema,
                         const SplitIndices& split);

// Inverse of the encoding for one row: category label (arg-max of the span)
// or the numerical value mapped back through the training range.
std::vector<RawCell> DecodeRow(std::span<const double> row,
                               const TableSchema& schema,
                               const EncodingMap& encoding);

struct DataStatistics {
  std::vector<double> mu;  // column means over training rows
  Matrix sigma_cov;        // sample covariance + ridge * I
  Matrix cholesky_lower;   // L with L L^T = sigma_cov
  std::vector<std::size_t> numerical_columns;
  std::vector<double> sigma_feat;  // parallel to numerical_columns
  double ridge_lambda = 1e-6;
  double sigma_floor = 1e-8;

  std::size_t dim() const noexcept { return mu.size(); }
};

inline constexpr double kDefaultRidge = 1e-6;
inline constexpr double kDefaultSigmaFloor = 1e-8;

DataStatistics FitStatistics(const EncodedDataset& ds,
                             double ridge_lambda = kDefaultRidge,
                             double sigma_floor = kDefaultSigmaFloor);

// Statistics over an arbitrary sample. `numerical_columns` selects the
// columns that receive a per-feature standard deviation.
DataStatistics FitStatistics(const Matrix& sample,
                             std::vector<std::size_t> numerical_columns,
                             double ridge_lambda = kDefaultRidge,
                             double sigma_floor = kDefaultSigmaFloor);

// Cache format for an encoded dataset: <dir>/encoded.csv holds
// split,label,c0..c{d-1}; <dir>/encoding.json holds schema and spans.
void SaveEncodedDataset(const EncodedDataset& ds,
                        const std::filesystem::path& dir);
EncodedDataset LoadEncodedDataset(const std::filesystem::path& dir);

}  // namespace tabadv

#endif  // TABADV_SCHEMA_DATA_HPP_
