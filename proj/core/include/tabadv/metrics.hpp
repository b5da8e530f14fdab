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

// Effectiveness and imperceptibility metrics over an AdversarialBatch.
//
// Unless noted otherwise a metric is averaged over every attacked instance,
// successful or not. All distances are measured in the encoded [0, 1] space.

#ifndef TABADV_METRICS_HPP_
#define TABADV_METRICS_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tabadv/attacks.hpp"
#include "tabadv/schema_data.hpp"
#include "tabadv/special_functions.hpp"

namespace tabadv {

inline constexpr double kDefaultSparsityTol = 1e-8;
inline constexpr double kDefaultAlpha = 0.05;

struct MetricRecord {
  double asr = 0.0;
  double mean_l2 = 0.0;
  double mean_l1 = 0.0;
  double mean_linf = 0.0;
  double sparsity_rate = 0.0;
  double sparsity_rate_num = 0.0;
  double sparsity_rate_cat = 0.0;
  double outlier_rate = 0.0;
  double mean_sensitivity = 0.0;
  std::optional<double> is_score;  // set by ImperceptibilityScore
};

// Weights apply to (l2, sparsity, outlier rate, sensitivity) in that order.
struct ISConfig {
  std::array<double, 4> weights = {1.0, 1.0, 1.0, 1.0};
  double floor = 1e-6;
  double l2_min = 0.0;
  double l2_max = 0.0;
  double sensitivity_min = 0.0;
  double sensitivity_max = 0.0;

  // Takes the normalization bounds from the given records.
  static ISConfig FromRecords(std::span<const MetricRecord> records);
  void Validate() const;
};

double AttackSuccessRate(const AdversarialBatch& batch);

enum class Norm { kL1, kL2, kLinf };

double VectorNorm(std::span<const double> v, Norm p);
// Mean ||delta||_p over the batch.
double Proximity(const AdversarialBatch& batch, Norm p);

struct SparsityRates {
  double overall = 0.0;    // changed encoded columns / d_total
  double numerical = 0.0;  // changed numerical columns / numerical count
  double categorical = 0.0;  // features with any changed span column / count
};

// A coordinate counts as changed iff |x_adv_j - x_j| > tol. Per-kind rates
// are 0 when the encoding has no feature of that kind.
SparsityRates Sparsity(const AdversarialBatch& batch, const EncodingMap& encoding,
                       double tol = kDefaultSparsityTol);

double MahalanobisSquared(std::span<const double> x, const DataStatistics& stats);
double Mahalanobis(std::span<const double> x, const DataStatistics& stats);

// Fraction of x_adv rows whose squared Mahalanobis distance exceeds the
// chi-squared critical value at `alpha` with stats.dim() degrees of freedom.
double OutlierRate(const AdversarialBatch& batch, const DataStatistics& stats,
                   double alpha = kDefaultAlpha);
// Same rule over the rows of a plain matrix.
double OutlierRate(const Matrix& rows, const DataStatistics& stats,
                   double alpha = kDefaultAlpha);

// Mean over the batch of sum_j |delta_j| / sigma_j over numerical columns.
double Sensitivity(const AdversarialBatch& batch, const DataStatistics& stats);

struct MetricOptions {
  double alpha = kDefaultAlpha;
  double sparsity_tol = kDefaultSparsityTol;
  // Restrict the imperceptibility metrics to successful examples. The ASR
  // always uses the whole batch.
  bool successful_only = false;
};

// All metrics except is_score. Throws ContractError on an empty batch.
MetricRecord EvaluateBatch(const AdversarialBatch& batch, const EncodingMap& encoding,
                           const DataStatistics& stats,
                           const MetricOptions& options = {});

// Weighted harmonic mean of the four components after flooring each at
// `floor`.
double HarmonicIs(const std::array<double, 4>& components,
                  const std::array<double, 4>& weights = {1.0, 1.0, 1.0, 1.0},
                  double floor = 1e-6);

// Min-max normalizes mean_l2 and mean_sensitivity with cfg's bounds, then
// fills is_score. A degenerate range (max == min) maps the component to
// cfg.floor.
void ImperceptibilityScore(std::span<MetricRecord> records, const ISConfig& cfg);
// Uses ISConfig::FromRecords(records).
void ImperceptibilityScore(std::span<MetricRecord> records);

// Sample Pearson correlation. Throws StatisticsError when either input has
// zero variance and ContractError on length mismatch or fewer than 2 points.
double Pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace tabadv

#endif  // TABADV_METRICS_HPP_
