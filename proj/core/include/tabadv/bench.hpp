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

// Benchmark orchestration: the datasets x models x attacks x epsilon grid,
// plateau and representative-epsilon selection, trade-off quadrants,
// correlation tables and report files.

#ifndef TABADV_BENCH_HPP_
#define TABADV_BENCH_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tabadv/attacks.hpp"
#include "tabadv/metrics.hpp"
#include "tabadv/models.hpp"
#include "tabadv/schema_data.hpp"

namespace tabadv {

// ---------------------------------------------------------------------------
// Configuration

struct DatasetConfig {
  std::string id;
  std::filesystem::path csv;
  std::filesystem::path schema;
};

inline const std::vector<double>& DefaultEpsilonGrid() {
  static const std::vector<double> grid = {0.01, 0.03, 0.05, 0.1, 0.3, 0.5, 1.0};
  return grid;
}

struct RunConfig {
  std::vector<DatasetConfig> datasets;
  std::vector<ModelSpec> models = {ModelSpec::LogisticRegression(), ModelSpec::Mlp()};
  std::vector<AttackMethod> attacks = AllAttacks();
  std::vector<double> eps_grid = DefaultEpsilonGrid();
  TrainConfig train;
  AttackSpec attack;  // shared hyperparameters; method and epsilon are per cell
  // BIM-only overrides of the step size and iteration count.
  std::optional<double> bim_step_size;
  std::optional<std::size_t> bim_steps;
  std::uint64_t seed = 42;
  std::size_t repetitions = 5;
  double alpha = kDefaultAlpha;
  double sparsity_tol = kDefaultSparsityTol;
  double plateau_delta = 0.01;
  bool successful_only = false;
  // Classify with the fixed preset instead of the Gaussian-baseline
  // thresholds of the run.
  bool preset_thresholds = false;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::filesystem::path out_dir = "results";
  std::filesystem::path cache_dir;  // empty: <out_dir>/cache

  std::filesystem::path EffectiveCacheDir() const {
    return cache_dir.empty() ? out_dir / "cache" : cache_dir;
  }
  // The attack spec for one cell, with BIM overrides applied.
  AttackSpec CellAttack(AttackMethod method, double epsilon,
                        std::size_t repetition) const;
  void Validate() const;
};

// INI-style key = value file with [run], [train], [attack] and one
// [dataset.<id>] section per dataset. Relative paths resolve against
// `base_dir`. Values may be quoted; lists are comma separated and may be
// wrapped in brackets.
RunConfig ParseRunConfig(std::istream& in, const std::filesystem::path& base_dir);
RunConfig LoadRunConfig(const std::filesystem::path& path);

// Parses "0.1, 0.3" or "[0.1, 0.3]"; the result is sorted ascending.
std::vector<double> ParseEpsilonList(const std::string& text);
std::vector<std::string> ParseNameList(const std::string& text);

// ---------------------------------------------------------------------------
// Records

struct RunRecord {
  std::string dataset;
  std::string model;
  AttackMethod attack = AttackMethod::kFgsm;
  double epsilon = 0.0;
  std::size_t repetitions = 1;  // runs averaged into this record
  MetricRecord metrics;
};

struct CellError {
  std::string dataset;
  std::string model;
  std::string attack;
  std::optional<double> epsilon;
  std::string message;
};

struct ModelSummary {
  std::string dataset;
  std::string model;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t eligible = 0;  // correctly classified test rows
};

struct BenchResult {
  std::vector<RunRecord> records;
  std::vector<CellError> errors;
  std::vector<ModelSummary> models;
};

// Arithmetic mean of every metric; is_score is left unset.
MetricRecord AverageMetrics(std::span<const MetricRecord> runs);

// ---------------------------------------------------------------------------
// Pipeline

struct PreparedDataset {
  std::string id;
  EncodedDataset data;
  DataStatistics stats;
};

// Ingest, impute (training-split reference), split 70/10/20 and encode.
PreparedDataset PrepareDataset(const DatasetConfig& dataset, std::uint64_t seed);

// Cached variants: reuse <cache>/<id>/ when its fingerprint matches the
// configuration, otherwise rebuild and store.
PreparedDataset PrepareDatasetCached(const DatasetConfig& dataset,
                                     const RunConfig& cfg);
FeedForwardClassifier TrainModelCached(const PreparedDataset& dataset,
                                       const ModelSpec& spec, const RunConfig& cfg);

ModelSummary Summarize(const PreparedDataset& dataset, const ModelSpec& spec,
                       const FeedForwardClassifier& model);

EligibleSet EligibleTestSet(const PreparedDataset& dataset,
                            const DifferentiableClassifier& model);

// Trains each model once per dataset, runs every attack x epsilon cell for
// cfg.repetitions seeds (cfg.seed + rep), evaluates metrics, averages over
// repetitions and fills is_score over the whole run. Cell failures are
// collected in `errors`; other cells proceed.
BenchResult RunBenchmark(const RunConfig& cfg, bool use_cache = true);

// models[d][m] is the model for datasets[d] and cfg.models[m]; an empty
// slot marks a model that failed to train.
using ModelGrid = std::vector<std::vector<std::optional<FeedForwardClassifier>>>;

// Grid over already prepared datasets and trained models. Records come out
// in the order datasets x models x attacks x epsilon.
BenchResult RunGrid(const RunConfig& cfg, std::span<const PreparedDataset> datasets,
                    const ModelGrid& models);

struct BimComparisonRow {
  std::string dataset;
  std::string model;
  double epsilon = 0.0;
  double asr_default = 0.0;   // alpha = eps / 10, 10 steps
  double asr_adjusted = 0.0;  // alpha = adjusted_step, adjusted_steps steps
};

std::vector<BimComparisonRow> CompareBimPresets(
    const RunConfig& cfg, std::span<const PreparedDataset> datasets,
    const ModelGrid& models, double adjusted_step = 0.05, std::size_t adjusted_steps = 20);

// ---------------------------------------------------------------------------
// Analysis

// Smallest eps_k with ASR(eps_j) - ASR(eps_k) < delta for every j > k; the
// largest epsilon when none qualifies. `curve` is (epsilon, asr) sorted by
// epsilon with at least two points.
double PlateauSelect(std::span<const std::pair<double, double>> curve,
                     double delta = 0.01);

// Mode of the selections; ties go to the smaller epsilon.
double RepresentativeEpsilon(std::span<const double> selections);

enum class Quadrant { kEffImp, kEffPer, kIneffImp, kIneffPer };
const char* QuadrantName(Quadrant q);

struct QuadrantThresholds {
  double asr = 0.659;
  double is = 0.181;

  static QuadrantThresholds Preset() { return {}; }
};

// ASR > th.asr and IS < th.is: effective and imperceptible, and so on.
Quadrant QuadrantClassify(double asr, double is_score, const QuadrantThresholds& th);
Quadrant QuadrantClassify(const RunRecord& record, const QuadrantThresholds& th);

// Maximum ASR and minimum IS over the Gaussian-noise records, if any.
std::optional<QuadrantThresholds> ThresholdsFromBaseline(
    std::span<const RunRecord> records);

inline constexpr std::array<const char*, 5> kCorrelatedMetrics = {
    "mean_l2", "sparsity_rate", "mean_sensitivity", "outlier_rate", "is_score"};

struct CorrelationRow {
  AttackMethod attack = AttackMethod::kFgsm;
  std::size_t samples = 0;
  // Parallel to kCorrelatedMetrics; nullopt when undefined.
  std::array<std::optional<double>, 5> r;
  std::optional<double> average;  // over the defined entries
};

// Pearson correlation of ASR against each metric, per attack, over all of
// that attack's records.
std::vector<CorrelationRow> CorrelationTable(std::span<const RunRecord> records);

struct PlateauSelection {
  std::string dataset;
  std::string model;
  AttackMethod attack = AttackMethod::kFgsm;
  double epsilon = 0.0;
};

struct QuadrantAssignment {
  std::size_t record = 0;  // index into the analysed records
  Quadrant quadrant = Quadrant::kIneffPer;
};

struct Analyses {
  std::vector<PlateauSelection> plateaus;
  std::map<AttackMethod, double> representative_epsilon;
  QuadrantThresholds thresholds;
  bool thresholds_from_baseline = false;
  std::vector<QuadrantAssignment> quadrants;
  std::vector<CorrelationRow> correlations;
};

// Records must carry is_score. Quadrant thresholds come from `fixed` when
// given, else from the Gaussian baseline, else the preset.
Analyses Analyze(std::span<const RunRecord> records, double plateau_delta = 0.01,
                 std::optional<QuadrantThresholds> fixed = std::nullopt);

// ---------------------------------------------------------------------------
// Reports

inline constexpr std::array<const char*, 14> kRecordColumns = {
    "dataset",       "model",             "attack",            "epsilon",
    "asr",           "mean_l2",           "mean_l1",           "mean_linf",
    "sparsity_rate", "sparsity_rate_num", "sparsity_rate_cat", "outlier_rate",
    "mean_sensitivity", "is_score"};

void WriteRecordsCsv(std::span<const RunRecord> records, std::ostream& out);
void WriteRecordsCsv(std::span<const RunRecord> records,
                     const std::filesystem::path& path);
std::vector<RunRecord> ReadRecordsCsv(std::istream& in);
std::vector<RunRecord> ReadRecordsCsv(const std::filesystem::path& path);

// analyses.json; `result` may be null when only records are available.
std::string AnalysesJson(std::span<const RunRecord> records, const Analyses& analyses,
                         const BenchResult* result);

// Writes records.csv, analyses.json, plots/asr_vs_eps_<dataset>_<model>.csv
// and plots/tradeoff_points.csv under `dir`.
void EmitReports(std::span<const RunRecord> records, const Analyses& analyses,
                 const BenchResult* result, const std::filesystem::path& dir);

void WriteBimComparison(std::span<const BimComparisonRow> rows,
                        const std::filesystem::path& path);

}  // namespace tabadv

#endif  // TABADV_BENCH_HPP_
