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

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "tabadv/rng.hpp"
#include "text_util.hpp"

namespace tabadv {
namespace {

using internal::ParseDouble;
using internal::SplitRecord;
using internal::Trim;

bool IsMissingMarker(const std::string& cell, const TableSchema& schema) {
  return std::find(schema.missing_markers.begin(), schema.missing_markers.end(),
                   cell) != schema.missing_markers.end();
}

std::vector<std::size_t> AllRows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Largest-remainder allocation of `take` items across classes.
std::vector<std::size_t> AllocateByClass(std::span<const std::size_t> counts,
                                         std::size_t pool, std::size_t take) {
  std::vector<std::size_t> alloc(counts.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double exact = static_cast<double>(take) *
                         static_cast<double>(counts[k]) /
                         static_cast<double>(pool);
    alloc[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += alloc[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [&](const auto& a, const auto& b) {
                     if (a.first != b.first) return a.first > b.first;
                     return counts[a.second] > counts[b.second];
                   });
  for (std::size_t i = 0; assigned < take; ++i) {
    ++alloc[remainders[i % remainders.size()].second];
    ++assigned;
  }
  return alloc;
}

// Draws `take` indices per class (allocated by class) from `by_class`,
// removing them from the pools.
std::vector<std::size_t> DrawStratified(
    std::vector<std::vector<std::size_t>>& by_class, std::size_t take) {
  std::vector<std::size_t> counts;
  std::size_t pool = 0;
  for (const auto& members : by_class) {
    counts.push_back(members.size());
    pool += members.size();
  }
  const auto alloc = AllocateByClass(counts, pool, take);
  std::vector<std::size_t> drawn;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& members = by_class[k];
    drawn.insert(drawn.end(), members.begin(), members.begin() + alloc[k]);
    members.erase(members.begin(), members.begin() + alloc[k]);
  }
  std::sort(drawn.begin(), drawn.end());
  return drawn;
}

}  // namespace

const char* FeatureKindName(FeatureKind kind) {
  return kind == FeatureKind::kNumerical ? "numerical" : "categorical";
}

void TableSchema::Validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& f : features) {
    if (f.name.empty()) throw SchemaError("schema: feature with empty name");
    if (!seen.insert(f.name).second) {
      throw SchemaError("schema: duplicate feature name '" + f.name + "'");
    }
    if (f.name == label_name) {
      throw SchemaError("schema: label column '" + label_name +
                        "' listed as a feature");
    }
  }
  if (label_name.empty()) throw SchemaError("schema: label column not set");
  if (positive_label.empty() && !positive_at_least) {
    throw SchemaError("schema: neither positive_label nor positive_at_least set");
  }
}

std::optional<std::size_t> TableSchema::FeatureIndex(
    const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t TableSchema::CountKind(FeatureKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(features.begin(), features.end(),
                    [kind](const auto& f) { return f.kind == kind; }));
}

TableSchema ParseSchemaManifest(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("schema manifest: ") + e.what());
  }
  TableSchema schema;
  try {
    schema.label_name = doc.at("label").get<std::string>();
    if (doc.contains("positive_label")) {
      schema.positive_label = doc["positive_label"].get<std::string>();
    }
    if (doc.contains("positive_at_least")) {
      schema.positive_at_least = doc["positive_at_least"].get<double>();
    }
    if (doc.contains("missing_markers")) {
      schema.missing_markers =
          doc["missing_markers"].get<std::vector<std::string>>();
    }
    if (doc.contains("delimiter")) {
      const auto delim = doc["delimiter"].get<std::string>();
      if (delim.size() != 1) {
        throw SchemaError("schema manifest: delimiter must be one character");
      }
      schema.delimiter = delim[0];
    }
    for (const auto& entry : doc.at("features")) {
      FeatureDescriptor f;
      f.name = entry.at("name").get<std::string>();
      const auto kind = entry.at("kind").get<std::string>();
      if (kind == "numerical") {
        f.kind = FeatureKind::kNumerical;
      } else if (kind == "categorical") {
        f.kind = FeatureKind::kCategorical;
        if (entry.contains("categories")) {
          f.categories = entry["categories"].get<std::vector<std::string>>();
        }
      } else {
        throw SchemaError("schema manifest: feature '" + f.name +
                          "' has unknown kind '" + kind + "'");
      }
      schema.features.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("schema manifest: ") + e.what());
  }
  schema.Validate();
  return schema;
}

TableSchema LoadSchemaManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseSchemaManifest(buffer.str());
}

RawTable LoadTable(const std::filesystem::path& path,
                   const TableSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open table " + path.string());
  return ParseTable(in, schema, path.string());
}

RawTable ParseTable(std::istream& in, const TableSchema& schema,
                    const std::string& source_name) {
  schema.Validate();
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(source_name + ": empty file, expected a header row", 0, "");
  }
  const auto header = SplitRecord(line, schema.delimiter);
  std::unordered_map<std::string, std::size_t> column_of;
  for (std::size_t c = 0; c < header.size(); ++c) column_of[header[c]] = c;

  const auto locate = [&](const std::string& name) {
    const auto it = column_of.find(name);
    if (it == column_of.end()) {
      throw SchemaError(source_name + ": column '" + name +
                        "' named in schema is missing from the header");
    }
    return it->second;
  };
  std::vector<std::size_t> feature_columns;
  for (const auto& f : schema.features) feature_columns.push_back(locate(f.name));
  const std::size_t label_column = locate(schema.label_name);

  RawTable table;
  for (const auto& f : schema.features) table.feature_names.push_back(f.name);

  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    ++row_number;
    const auto fields = SplitRecord(line, schema.delimiter);
    if (fields.size() != header.size()) {
      throw ParseError(source_name + ": row " + std::to_string(row_number) +
                           " has " + std::to_string(fields.size()) +
                           " fields, header has " +
                           std::to_string(header.size()),
                       row_number, "");
    }
    std::vector<RawCell> cells;
    cells.reserve(schema.features.size());
    for (std::size_t i = 0; i < schema.features.size(); ++i) {
      const auto& f = schema.features[i];
      const std::string& text = fields[feature_columns[i]];
      if (IsMissingMarker(text, schema)) {
        cells.emplace_back(std::monostate{});
      } else if (f.kind == FeatureKind::kNumerical) {
        const auto value = ParseDouble(text);
        if (!value || !std::isfinite(*value)) {
          throw ParseError(source_name + ": row " + std::to_string(row_number) +
                               ", column '" + f.name +
                               "': cannot parse '" + text + "' as a number",
                           row_number, f.name);
        }
        cells.emplace_back(*value);
      } else {
        cells.emplace_back(text);
      }
    }
    const std::string& label_text = fields[label_column];
    if (IsMissingMarker(label_text, schema)) {
      throw ParseError(source_name + ": row " + std::to_string(row_number) +
                           " has a missing label",
                       row_number, schema.label_name);
    }
    int label = 0;
    if (schema.positive_at_least) {
      const auto value = ParseDouble(label_text);
      if (!value) {
        throw ParseError(source_name + ": row " + std::to_string(row_number) +
                             ", label '" + label_text + "' is not numeric",
                         row_number, schema.label_name);
      }
      label = *value >= *schema.positive_at_least ? 1 : 0;
    } else {
      label = label_text == schema.positive_label ? 1 : 0;
    }
    table.rows.push_back(std::move(cells));
    table.labels.push_back(label);
  }
  return table;
}

RawTable Impute(const RawTable& table, const TableSchema& schema,
                std::span<const std::size_t> reference_rows) {
  const auto all = AllRows(table.num_rows());
  const auto reference =
      reference_rows.empty() ? std::span<const std::size_t>(all) : reference_rows;
  RawTable out = table;
  for (std::size_t j = 0; j < schema.features.size(); ++j) {
    const auto& f = schema.features[j];
    bool any_missing = false;
    for (const auto& row : table.rows) any_missing |= IsMissing(row[j]);
    if (!any_missing) continue;

    RawCell fill;
    if (f.kind == FeatureKind::kNumerical) {
      std::vector<double> values;
      for (auto r : reference) {
        if (const auto* v = std::get_if<double>(&table.rows[r][j])) {
          values.push_back(*v);
        }
      }
      if (values.empty()) {
        throw PreprocessingError("impute: feature '" + f.name +
                                 "' has no observed values");
      }
      fill = Median(std::move(values));
    } else {
      std::map<std::string, std::size_t> counts;
      for (auto r : reference) {
        if (const auto* v = std::get_if<std::string>(&table.rows[r][j])) {
          ++counts[*v];
        }
      }
      if (counts.empty()) {
        throw PreprocessingError("impute: feature '" + f.name +
                                 "' has no observed values");
      }
      const auto mode = std::max_element(
          counts.begin(), counts.end(),
          [](const auto& a, const auto& b) { return a.second < b.second; });
      fill = mode->first;
    }
    for (auto& row : out.rows) {
      if (IsMissing(row[j])) row[j] = fill;
    }
  }
  return out;
}

SplitIndices SplitStratified(std::size_t n, std::span<const int> labels,
                             std::uint64_t seed) {
  if (labels.size() != n) {
    throw ContractError("split_stratified: label count " +
                        std::to_string(labels.size()) + " != n " +
                        std::to_string(n));
  }
  if (n < 10) {
    throw StratificationError("split_stratified: need at least 10 rows, got " +
                              std::to_string(n));
  }
  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ContractError("split_stratified: labels must be binary");
    }
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t k = 0; k < 2; ++k) {
    if (by_class[k].size() < 3) {
      throw StratificationError("split_stratified: class " + std::to_string(k) +
                                " has " + std::to_string(by_class[k].size()) +
                                " instances, need at least 3");
    }
  }
  Rng rng(seed);
  for (auto& members : by_class) rng.Shuffle(members.begin(), members.end());

  SplitIndices split;
  const std::size_t n_test = (n + 4) / 5;
  split.test = DrawStratified(by_class, n_test);
  const std::size_t rest = n - n_test;
  split.val = DrawStratified(by_class, (rest + 7) / 8);
  for (const auto& members : by_class) {
    split.train.insert(split.train.end(), members.begin(), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  return split;
}

std::vector<std::size_t> EncodingMap::NumericalColumns() const {
  std::vector<std::size_t> cols;
  for (const auto& s : spans) {
    if (s.kind == FeatureKind::kNumerical) cols.push_back(s.begin);
  }
  return cols;
}

std::vector<FeatureKind> EncodingMap::ColumnKinds() const {
  std::vector<FeatureKind> kinds(d_total, FeatureKind::kNumerical);
  for (const auto& s : spans) {
    for (std::size_t c = s.begin; c < s.end; ++c) kinds[c] = s.kind;
  }
  return kinds;
}

std::size_t EncodingMap::CountKind(FeatureKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(spans.begin(), spans.end(),
                    [kind](const auto& s) { return s.kind == kind; }));
}

void EncodingMap::Validate() const {
  std::size_t next = 0;
  std::size_t onehot = 0;
  for (const auto& s : spans) {
    if (s.begin != next || s.end <= s.begin) {
      throw SchemaError("encoding map: spans are not contiguous at column " +
                        std::to_string(next));
    }
    if (s.kind == FeatureKind::kNumerical && s.width() != 1) {
      throw SchemaError("encoding map: numerical span wider than one column");
    }
    if (s.kind == FeatureKind::kCategorical) onehot += s.width();
    next = s.end;
  }
  if (next != d_total || onehot != d_encoded) {
    throw SchemaError("encoding map: spans do not cover [0, d_total)");
  }
}

std::vector<int> EncodedDataset::Labels(
    std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(y[i]);
  return out;
}

EncodedDataset FitEncode(const RawTable& table, const TableSchema& schema,
                         const SplitIndices& split) {
  const std::size_t n = table.num_rows();
  if (split.total() != n) {
    throw ContractError("fit_encode: split covers " +
                        std::to_string(split.total()) + " rows, table has " +
                        std::to_string(n));
  }
  if (split.train.empty()) throw ContractError("fit_encode: empty training split");
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (IsMissing(row[j])) {
        throw PreprocessingError("fit_encode: feature '" +
                                 schema.features[j].name +
                                 "' still has missing values; impute first");
      }
    }
  }

  // Constant and duplicate detection on the training split.
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < schema.features.size(); ++j) {
    const auto& f = schema.features[j];
    const RawCell& first = table.rows[split.train.front()][j];
    const bool constant = std::all_of(
        split.train.begin(), split.train.end(),
        [&](std::size_t r) { return table.rows[r][j] == first; });
    if (constant) continue;
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](auto k) {
      if (schema.features[k].kind != f.kind) return false;
      return std::all_of(split.train.begin(), split.train.end(),
                         [&](std::size_t r) {
                           return table.rows[r][k] == table.rows[r][j];
                         });
    });
    if (!duplicate) kept.push_back(j);
  }
  if (kept.empty()) {
    throw PreprocessingError(
        "fit_encode: every feature is constant on the training split");
  }

  EncodedDataset ds;
  ds.schema.label_name = schema.label_name;
  ds.schema.positive_label = schema.positive_label;
  ds.schema.positive_at_least = schema.positive_at_least;
  ds.schema.missing_markers = schema.missing_markers;
  ds.schema.delimiter = schema.delimiter;

  std::size_t column = 0;
  for (const auto j : kept) {
    FeatureDescriptor f = schema.features[j];
    FeatureSpan span{ds.schema.features.size(), f.kind, column, column};
    if (f.kind == FeatureKind::kNumerical) {
      double lo = std::get<double>(table.rows[split.train.front()][j]);
      double hi = lo;
      for (auto r : split.train) {
        const double v = std::get<double>(table.rows[r][j]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      f.observed_min = lo;
      f.observed_max = hi;
      span.end = column + 1;
    } else {
      std::set<std::string> observed;
      for (const auto& row : table.rows) observed.insert(std::get<std::string>(row[j]));
      if (f.categories.empty()) {
        f.categories.assign(observed.begin(), observed.end());
      } else {
        for (const auto& value : observed) {
          if (std::find(f.categories.begin(), f.categories.end(), value) ==
              f.categories.end()) {
            throw SchemaError("fit_encode: feature '" + f.name +
                              "' has value '" + value +
                              "' outside its declared categories");
          }
        }
      }
      span.end = column + f.categories.size();
      ds.encoding.d_encoded += f.categories.size();
    }
    column = span.end;
    ds.encoding.spans.push_back(span);
    ds.schema.features.push_back(std::move(f));
  }
  ds.encoding.d_total = column;

  ds.x = Matrix(n, column);
  for (std::size_t r = 0; r < n; ++r) {
    auto out = ds.x.row(r);
    for (std::size_t s = 0; s < kept.size(); ++s) {
      const auto& span = ds.encoding.spans[s];
      const auto& f = ds.schema.features[s];
      const RawCell& cell = table.rows[r][kept[s]];
      if (f.kind == FeatureKind::kNumerical) {
        const double scaled = (std::get<double>(cell) - f.observed_min) /
                              (f.observed_max - f.observed_min);
        out[span.begin] = std::clamp(scaled, 0.0, 1.0);
      } else {
        const auto& value = std::get<std::string>(cell);
        const auto pos = std::find(f.categories.begin(), f.categories.end(), value);
        out[span.begin + static_cast<std::size_t>(pos - f.categories.begin())] = 1.0;
      }
    }
  }
  ds.y = table.labels;
  ds.split = split;
  return ds;
}

std::vector<RawCell> DecodeRow(std::span<const double> row,
                               const TableSchema& schema,
                               const EncodingMap& encoding) {
  if (row.size() != encoding.d_total) {
    throw ShapeError("decode_row: row has " + std::to_string(row.size()) +
                     " columns, encoding has " +
                     std::to_string(encoding.d_total));
  }
  std::vector<RawCell> out;
  for (const auto& span : encoding.spans) {
    const auto& f = schema.features[span.feature];
    if (span.kind == FeatureKind::kNumerical) {
      out.emplace_back(f.observed_min +
                       row[span.begin] * (f.observed_max - f.observed_min));
    } else {
      const auto first = row.begin() + static_cast<std::ptrdiff_t>(span.begin);
      const auto best =
          std::max_element(first, row.begin() + static_cast<std::ptrdiff_t>(span.end));
      out.emplace_back(f.categories[static_cast<std::size_t>(best - first)]);
    }
  }
  return out;
}

DataStatistics FitStatistics(const EncodedDataset& ds, double ridge_lambda,
                             double sigma_floor) {
  return FitStatistics(ds.Rows(ds.split.train), ds.encoding.NumericalColumns(),
                       ridge_lambda, sigma_floor);
}

DataStatistics FitStatistics(const Matrix& sample,
                             std::vector<std::size_t> numerical_columns,
                             double ridge_lambda, double sigma_floor) {
  const std::size_t n = sample.rows();
  const std::size_t d = sample.cols();
  if (n < 2) {
    throw StatisticsError("fit_statistics: need at least 2 rows, got " +
                          std::to_string(n));
  }
  if (ridge_lambda < 0.0 || sigma_floor <= 0.0) {
    throw ContractError("fit_statistics: ridge must be >= 0 and floor > 0");
  }
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> x(sample.data().data(),
                                     static_cast<Eigen::Index>(n),
                                     static_cast<Eigen::Index>(d));
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  const RowMajor centered = x.rowwise() - mean.transpose();
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov.diagonal().array() += ridge_lambda;

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw StatisticsError(
        "fit_statistics: covariance + ridge is not positive definite");
  }
  const Eigen::MatrixXd lower = llt.matrixL();

  DataStatistics stats;
  stats.ridge_lambda = ridge_lambda;
  stats.sigma_floor = sigma_floor;
  stats.mu.assign(mean.data(), mean.data() + d);
  stats.sigma_cov = Matrix(d, d);
  stats.cholesky_lower = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto ei = static_cast<Eigen::Index>(i);
      const auto ej = static_cast<Eigen::Index>(j);
      // Mirror the upper triangle so the stored matrix is exactly symmetric.
      stats.sigma_cov(i, j) = i <= j ? cov(ei, ej) : cov(ej, ei);
      stats.cholesky_lower(i, j) = lower(ei, ej);
    }
  }
  for (const auto c : numerical_columns) {
    if (c >= d) throw ContractError("fit_statistics: column index out of range");
    const double var = cov(static_cast<Eigen::Index>(c),
                           static_cast<Eigen::Index>(c)) - ridge_lambda;
    stats.sigma_feat.push_back(std::max(std::sqrt(std::max(var, 0.0)), sigma_floor));
  }
  stats.numerical_columns = std::move(numerical_columns);
  return stats;
}

}  // namespace tabadv
