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
#include <sstream>

#include "json.hpp"
#include "tabadv/schema_data.hpp"
#include "text_util.hpp"

namespace tabadv {
namespace {

constexpr int kCacheVersion = 1;

nlohmann::json SchemaToJson(const TableSchema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : schema.features) {
    nlohmann::json entry = {{"name", f.name}, {"kind", FeatureKindName(f.kind)}};
    if (f.kind == FeatureKind::kCategorical) {
      entry["categories"] = f.categories;
    } else {
      entry["observed_min"] = internal::FormatDouble(f.observed_min);
      entry["observed_max"] = internal::FormatDouble(f.observed_max);
    }
    features.push_back(std::move(entry));
  }
  nlohmann::json doc = {{"label", schema.label_name},
                        {"positive_label", schema.positive_label},
                        {"missing_markers", schema.missing_markers},
                        {"delimiter", std::string(1, schema.delimiter)},
                        {"features", std::move(features)}};
  if (schema.positive_at_least) {
    doc["positive_at_least"] = *schema.positive_at_least;
  }
  return doc;
}

double ParseCachedDouble(const nlohmann::json& value) {
  const auto parsed = internal::ParseDouble(value.get<std::string>());
  if (!parsed) throw IoError("encoded cache: malformed number");
  return *parsed;
}

}  // namespace

void SaveEncodedDataset(const EncodedDataset& ds,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<char> split_of(ds.x.rows(), '?');
  for (auto i : ds.split.train) split_of[i] = 't';
  for (auto i : ds.split.val) split_of[i] = 'v';
  for (auto i : ds.split.test) split_of[i] = 'e';

  const auto csv_path = dir / "encoded.csv";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  csv << "split,label";
  for (std::size_t c = 0; c < ds.x.cols(); ++c) csv << ",c" << c;
  csv << '\n';
  for (std::size_t r = 0; r < ds.x.rows(); ++r) {
    csv << split_of[r] << ',' << ds.y[r];
    for (const double v : ds.x.row(r)) csv << ',' << internal::FormatDouble(v);
    csv << '\n';
  }

  nlohmann::json spans = nlohmann::json::array();
  for (const auto& s : ds.encoding.spans) {
    spans.push_back({{"feature", s.feature},
                     {"kind", FeatureKindName(s.kind)},
                     {"begin", s.begin},
                     {"end", s.end}});
  }
  const nlohmann::json doc = {{"version", kCacheVersion},
                              {"schema", SchemaToJson(ds.schema)},
                              {"spans", std::move(spans)},
                              {"d_encoded", ds.encoding.d_encoded},
                              {"d_total", ds.encoding.d_total}};
  const auto json_path = dir / "encoding.json";
  std::ofstream js(json_path, std::ios::binary);
  if (!js) throw IoError("cannot write " + json_path.string());
  js << doc.dump(2) << '\n';
  if (!csv || !js) throw IoError("write failed under " + dir.string());
}

EncodedDataset LoadEncodedDataset(const std::filesystem::path& dir) {
  const auto json_path = dir / "encoding.json";
  std::ifstream js(json_path);
  if (!js) throw IoError("cannot open " + json_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(json_path.string() + ": " + e.what());
  }
  if (doc.value("version", 0) != kCacheVersion) {
    throw IoError(json_path.string() + ": unsupported cache version");
  }

  EncodedDataset ds;
  try {
    const auto& schema = doc.at("schema");
    ds.schema = ParseSchemaManifest(schema.dump());
    for (std::size_t i = 0; i < ds.schema.features.size(); ++i) {
      const auto& entry = schema.at("features").at(i);
      if (ds.schema.features[i].kind == FeatureKind::kNumerical) {
        ds.schema.features[i].observed_min = ParseCachedDouble(entry.at("observed_min"));
        ds.schema.features[i].observed_max = ParseCachedDouble(entry.at("observed_max"));
      }
    }
    for (const auto& s : doc.at("spans")) {
      ds.encoding.spans.push_back(
          {s.at("feature").get<std::size_t>(),
           s.at("kind").get<std::string>() == "numerical" ? FeatureKind::kNumerical
                                                          : FeatureKind::kCategorical,
           s.at("begin").get<std::size_t>(), s.at("end").get<std::size_t>()});
    }
    ds.encoding.d_encoded = doc.at("d_encoded").get<std::size_t>();
    ds.encoding.d_total = doc.at("d_total").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(json_path.string() + ": " + e.what());
  }
  ds.encoding.Validate();

  const auto csv_path = dir / "encoded.csv";
  std::ifstream csv(csv_path);
  if (!csv) throw IoError("cannot open " + csv_path.string());
  std::string line;
  std::getline(csv, line);
  std::vector<double> values;
  std::size_t r = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const auto fields = internal::SplitRecord(line, ',');
    if (fields.size() != ds.encoding.d_total + 2 || fields[0].size() != 1) {
      throw IoError(csv_path.string() + ": malformed row " + std::to_string(r + 1));
    }
    switch (fields[0][0]) {
      case 't': ds.split.train.push_back(r); break;
      case 'v': ds.split.val.push_back(r); break;
      case 'e': ds.split.test.push_back(r); break;
      default:
        throw IoError(csv_path.string() + ": unknown split tag in row " +
                      std::to_string(r + 1));
    }
    ds.y.push_back(fields[1] == "1" ? 1 : 0);
    for (std::size_t c = 2; c < fields.size(); ++c) {
      const auto v = internal::ParseDouble(fields[c]);
      if (!v) throw IoError(csv_path.string() + ": malformed number in row " +
                            std::to_string(r + 1));
      values.push_back(*v);
    }
    ++r;
  }
  ds.x = Matrix(r, ds.encoding.d_total, std::move(values));
  return ds;
}

}  // namespace tabadv
