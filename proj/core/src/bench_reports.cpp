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

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "tabadv/bench.hpp"
#include "tabadv/error.hpp"
#include "text_util.hpp"

namespace tabadv {
namespace {

using internal::FormatDouble;
using Json = nlohmann::ordered_json;

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void CheckWritten(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw IoError("write failed for " + path.string());
}

// A file-name-safe rendering of an identifier.
std::string Slug(const std::string& s) {
  std::string out;
  for (const char c : s) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '-' || c == '_';
    out.push_back(keep ? c : '_');
  }
  return out;
}

Json OptionalNumber(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

void WriteRecordsCsv(std::span<const RunRecord> records, std::ostream& out) {
  for (std::size_t i = 0; i < kRecordColumns.size(); ++i) {
    out << (i ? "," : "") << kRecordColumns[i];
  }
  out << '\n';
  for (const auto& r : records) {
    const auto& m = r.metrics;
    out << r.dataset << ',' << r.model << ',' << AttackName(r.attack) << ','
        << FormatDouble(r.epsilon) << ',' << FormatDouble(m.asr) << ','
        << FormatDouble(m.mean_l2) << ',' << FormatDouble(m.mean_l1) << ','
        << FormatDouble(m.mean_linf) << ',' << FormatDouble(m.sparsity_rate) << ','
        << FormatDouble(m.sparsity_rate_num) << ','
        << FormatDouble(m.sparsity_rate_cat) << ',' << FormatDouble(m.outlier_rate)
        << ',' << FormatDouble(m.mean_sensitivity) << ','
        << (m.is_score ? FormatDouble(*m.is_score) : std::string()) << '\n';
  }
}

void WriteRecordsCsv(std::span<const RunRecord> records,
                     const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  WriteRecordsCsv(records, out);
  CheckWritten(out, path);
}

std::vector<RunRecord> ReadRecordsCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("records: missing header", 0, "");
  const auto header = internal::SplitRecord(line, ',');
  if (header.size() != kRecordColumns.size() ||
      !std::equal(header.begin(), header.end(), kRecordColumns.begin())) {
    throw ParseError("records: unexpected header '" + line + "'", 0, "");
  }
  std::vector<RunRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (internal::Trim(line).empty()) continue;
    const auto f = internal::SplitRecord(line, ',');
    if (f.size() != kRecordColumns.size()) {
      throw ParseError("records: wrong field count on row " + std::to_string(row), row,
                       "");
    }
    const auto number = [&](std::size_t k) {
      const auto v = internal::ParseDouble(f[k]);
      if (!v) {
        throw ParseError("records: bad number '" + f[k] + "' on row " +
                             std::to_string(row),
                         row, kRecordColumns[k]);
      }
      return *v;
    };
    RunRecord r;
    r.dataset = f[0];
    r.model = f[1];
    r.attack = AttackFromName(f[2]);
    r.epsilon = number(3);
    r.metrics.asr = number(4);
    r.metrics.mean_l2 = number(5);
    r.metrics.mean_l1 = number(6);
    r.metrics.mean_linf = number(7);
    r.metrics.sparsity_rate = number(8);
    r.metrics.sparsity_rate_num = number(9);
    r.metrics.sparsity_rate_cat = number(10);
    r.metrics.outlier_rate = number(11);
    r.metrics.mean_sensitivity = number(12);
    if (!f[13].empty()) r.metrics.is_score = number(13);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<RunRecord> ReadRecordsCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return ReadRecordsCsv(in);
}

std::string AnalysesJson(std::span<const RunRecord> records, const Analyses& analyses,
                         const BenchResult* result) {
  Json doc;
  doc["thresholds"] = {
      {"asr", analyses.thresholds.asr},
      {"is", analyses.thresholds.is},
      {"source", analyses.thresholds_from_baseline ? "gaussian_baseline" : "fixed"}};

  Json plateaus = Json::array();
  for (const auto& p : analyses.plateaus) {
    plateaus.push_back({{"dataset", p.dataset},
                        {"model", p.model},
                        {"attack", AttackName(p.attack)},
                        {"epsilon", p.epsilon}});
  }
  doc["plateau_selections"] = std::move(plateaus);

  Json representative = Json::object();
  for (const auto& [attack, eps] : analyses.representative_epsilon) {
    representative[AttackName(attack)] = eps;
  }
  doc["representative_epsilon"] = std::move(representative);

  Json quadrants = Json::array();
  for (const auto& q : analyses.quadrants) {
    const auto& r = records[q.record];
    quadrants.push_back({{"dataset", r.dataset},
                         {"model", r.model},
                         {"attack", AttackName(r.attack)},
                         {"epsilon", r.epsilon},
                         {"asr", r.metrics.asr},
                         {"is_score", OptionalNumber(r.metrics.is_score)},
                         {"quadrant", QuadrantName(q.quadrant)}});
  }
  doc["quadrants"] = std::move(quadrants);

  Json correlations = Json::array();
  for (const auto& row : analyses.correlations) {
    Json entry = {{"attack", AttackName(row.attack)}, {"samples", row.samples}};
    for (std::size_t k = 0; k < kCorrelatedMetrics.size(); ++k) {
      entry[kCorrelatedMetrics[k]] = OptionalNumber(row.r[k]);
    }
    entry["average"] = OptionalNumber(row.average);
    correlations.push_back(std::move(entry));
  }
  doc["correlations"] = std::move(correlations);

  if (result != nullptr) {
    Json models = Json::array();
    for (const auto& m : result->models) {
      models.push_back({{"dataset", m.dataset},
                        {"model", m.model},
                        {"train_accuracy", m.train_accuracy},
                        {"val_accuracy", m.val_accuracy},
                        {"test_accuracy", m.test_accuracy},
                        {"eligible", m.eligible}});
    }
    doc["models"] = std::move(models);
    Json errors = Json::array();
    for (const auto& e : result->errors) {
      errors.push_back({{"dataset", e.dataset},
                        {"model", e.model},
                        {"attack", e.attack},
                        {"epsilon", OptionalNumber(e.epsilon)},
                        {"message", e.message}});
    }
    doc["errors"] = std::move(errors);
  }
  return doc.dump(2) + "\n";
}

void EmitReports(std::span<const RunRecord> records, const Analyses& analyses,
                 const BenchResult* result, const std::filesystem::path& dir) {
  WriteRecordsCsv(records, dir / "records.csv");

  {
    const auto path = dir / "analyses.json";
    auto out = OpenForWrite(path);
    out << AnalysesJson(records, analyses, result);
    CheckWritten(out, path);
  }

  std::map<std::pair<std::string, std::string>, std::vector<const RunRecord*>> cells;
  for (const auto& r : records) cells[{r.dataset, r.model}].push_back(&r);
  for (const auto& [key, rows] : cells) {
    const auto path = dir / "plots" /
                      ("asr_vs_eps_" + Slug(key.first) + "_" + Slug(key.second) + ".csv");
    auto out = OpenForWrite(path);
    out << "attack,epsilon,asr\n";
    for (const auto* r : rows) {
      out << AttackName(r->attack) << ',' << FormatDouble(r->epsilon) << ','
          << FormatDouble(r->metrics.asr) << '\n';
    }
    CheckWritten(out, path);
  }

  const auto path = dir / "plots" / "tradeoff_points.csv";
  auto out = OpenForWrite(path);
  out << "dataset,model,attack,epsilon,asr,is_score,quadrant\n";
  for (const auto& q : analyses.quadrants) {
    const auto& r = records[q.record];
    out << r.dataset << ',' << r.model << ',' << AttackName(r.attack) << ','
        << FormatDouble(r.epsilon) << ',' << FormatDouble(r.metrics.asr) << ','
        << (r.metrics.is_score ? FormatDouble(*r.metrics.is_score) : std::string())
        << ',' << QuadrantName(q.quadrant) << '\n';
  }
  CheckWritten(out, path);
}

void WriteBimComparison(std::span<const BimComparisonRow> rows,
                        const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  out << "dataset,model,epsilon,asr_default,asr_adjusted,difference\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.model << ',' << FormatDouble(r.epsilon) << ','
        << FormatDouble(r.asr_default) << ',' << FormatDouble(r.asr_adjusted) << ','
        << FormatDouble(r.asr_adjusted - r.asr_default) << '\n';
  }
  CheckWritten(out, path);
}

}  // namespace tabadv
