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

#include "tabadv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "tabadv/error.hpp"

namespace tabadv {
namespace {

void RequireNonEmpty(const AdversarialBatch& batch, const char* what) {
  if (batch.examples.empty()) {
    throw ContractError(std::string(what) + ": empty adversarial batch");
  }
}

double Normalize(double v, double lo, double hi, double floor) {
  if (!(hi > lo)) return floor;
  return (v - lo) / (hi - lo);
}

}  // namespace

ISConfig ISConfig::FromRecords(std::span<const MetricRecord> records) {
  ISConfig cfg;
  if (records.empty()) return cfg;
  const auto [l2_lo, l2_hi] = std::minmax_element(
      records.begin(), records.end(),
      [](const auto& a, const auto& b) { return a.mean_l2 < b.mean_l2; });
  const auto [sen_lo, sen_hi] = std::minmax_element(
      records.begin(), records.end(), [](const auto& a, const auto& b) {
        return a.mean_sensitivity < b.mean_sensitivity;
      });
  cfg.l2_min = l2_lo->mean_l2;
  cfg.l2_max = l2_hi->mean_l2;
  cfg.sensitivity_min = sen_lo->mean_sensitivity;
  cfg.sensitivity_max = sen_hi->mean_sensitivity;
  return cfg;
}

void ISConfig::Validate() const {
  for (const double w : weights) {
    if (!(w > 0.0)) throw ContractError("IS config: weights must be positive");
  }
  if (!(floor > 0.0)) throw ContractError("IS config: floor must be positive");
  if (l2_max < l2_min || sensitivity_max < sensitivity_min) {
    throw ContractError("IS config: normalization bounds reversed");
  }
}

double AttackSuccessRate(const AdversarialBatch& batch) {
  RequireNonEmpty(batch, "asr");
  const auto hits = std::count_if(batch.examples.begin(), batch.examples.end(),
                                  [](const auto& ex) { return ex.success; });
  return static_cast<double>(hits) / static_cast<double>(batch.examples.size());
}

double VectorNorm(std::span<const double> v, Norm p) {
  double acc = 0.0;
  switch (p) {
    case Norm::kL1:
      for (const double x : v) acc += std::abs(x);
      return acc;
    case Norm::kL2:
      for (const double x : v) acc += x * x;
      return std::sqrt(acc);
    case Norm::kLinf:
      for (const double x : v) acc = std::max(acc, std::abs(x));
      return acc;
  }
  return acc;
}

double Proximity(const AdversarialBatch& batch, Norm p) {
  RequireNonEmpty(batch, "proximity");
  double sum = 0.0;
  for (const auto& ex : batch.examples) sum += VectorNorm(ex.delta, p);
  return sum / static_cast<double>(batch.examples.size());
}

SparsityRates Sparsity(const AdversarialBatch& batch, const EncodingMap& encoding,
                       double tol) {
  RequireNonEmpty(batch, "sparsity");
  if (!(tol > 0.0)) throw ContractError("sparsity: tol must be > 0");
  const std::size_t num_count = encoding.CountKind(FeatureKind::kNumerical);
  const std::size_t cat_count = encoding.CountKind(FeatureKind::kCategorical);
  SparsityRates rates;
  for (const auto& ex : batch.examples) {
    if (ex.delta.size() != encoding.d_total) {
      throw ShapeError("sparsity: delta width differs from the encoding");
    }
    std::size_t changed = 0;
    std::size_t num_changed = 0;
    std::size_t cat_changed = 0;
    for (const auto& span : encoding.spans) {
      std::size_t in_span = 0;
      for (std::size_t j = span.begin; j < span.end; ++j) {
        if (std::abs(ex.delta[j]) > tol) ++in_span;
      }
      changed += in_span;
      if (span.kind == FeatureKind::kNumerical) {
        num_changed += in_span;
      } else if (in_span > 0) {
        ++cat_changed;
      }
    }
    rates.overall +=
        static_cast<double>(changed) / static_cast<double>(encoding.d_total);
    if (num_count > 0) {
      rates.numerical +=
          static_cast<double>(num_changed) / static_cast<double>(num_count);
    }
    if (cat_count > 0) {
      rates.categorical +=
          static_cast<double>(cat_changed) / static_cast<double>(cat_count);
    }
  }
  const double n = static_cast<double>(batch.examples.size());
  rates.overall /= n;
  rates.numerical /= n;
  rates.categorical /= n;
  return rates;
}

double MahalanobisSquared(std::span<const double> x, const DataStatistics& stats) {
  const std::size_t d = stats.dim();
  if (x.size() != d) throw ShapeError("mahalanobis: dimension mismatch");
  if (stats.cholesky_lower.rows() != d) {
    throw StatisticsError("mahalanobis: statistics are not fitted");
  }
  // Solve L z = x - mu; then MD^2 = z^T z.
  std::vector<double> z(d);
  double md2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double s = x[i] - stats.mu[i];
    for (std::size_t k = 0; k < i; ++k) s -= stats.cholesky_lower(i, k) * z[k];
    z[i] = s / stats.cholesky_lower(i, i);
    md2 += z[i] * z[i];
  }
  return md2;
}

double Mahalanobis(std::span<const double> x, const DataStatistics& stats) {
  return std::sqrt(MahalanobisSquared(x, stats));
}

double OutlierRate(const AdversarialBatch& batch, const DataStatistics& stats,
                   double alpha) {
  RequireNonEmpty(batch, "outlier_rate");
  const double threshold = Chi2Critical(alpha, stats.dim());
  std::size_t flagged = 0;
  for (const auto& ex : batch.examples) {
    if (MahalanobisSquared(ex.x_adv, stats) > threshold) ++flagged;
  }
  return static_cast<double>(flagged) / static_cast<double>(batch.examples.size());
}

double OutlierRate(const Matrix& rows, const DataStatistics& stats, double alpha) {
  if (rows.rows() == 0) throw ContractError("outlier_rate: no rows");
  const double threshold = Chi2Critical(alpha, stats.dim());
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    if (MahalanobisSquared(rows.row(i), stats) > threshold) ++flagged;
  }
  return static_cast<double>(flagged) / static_cast<double>(rows.rows());
}

double Sensitivity(const AdversarialBatch& batch, const DataStatistics& stats) {
  RequireNonEmpty(batch, "sensitivity");
  double sum = 0.0;
  for (const auto& ex : batch.examples) {
    for (std::size_t k = 0; k < stats.numerical_columns.size(); ++k) {
      const std::size_t j = stats.numerical_columns[k];
      if (j >= ex.delta.size()) throw ShapeError("sensitivity: column out of range");
      sum += std::abs(ex.delta[j]) / stats.sigma_feat[k];
    }
  }
  return sum / static_cast<double>(batch.examples.size());
}

MetricRecord EvaluateBatch(const AdversarialBatch& batch, const EncodingMap& encoding,
                           const DataStatistics& stats, const MetricOptions& options) {
  MetricRecord rec;
  rec.asr = AttackSuccessRate(batch);

  const AdversarialBatch* view = &batch;
  AdversarialBatch successes;
  if (options.successful_only) {
    successes.attack = batch.attack;
    for (const auto& ex : batch.examples) {
      if (ex.success) successes.examples.push_back(ex);
    }
    if (successes.examples.empty()) return rec;
    view = &successes;
  }

  rec.mean_l1 = Proximity(*view, Norm::kL1);
  rec.mean_l2 = Proximity(*view, Norm::kL2);
  rec.mean_linf = Proximity(*view, Norm::kLinf);
  const auto sparsity = Sparsity(*view, encoding, options.sparsity_tol);
  rec.sparsity_rate = sparsity.overall;
  rec.sparsity_rate_num = sparsity.numerical;
  rec.sparsity_rate_cat = sparsity.categorical;
  rec.outlier_rate = OutlierRate(*view, stats, options.alpha);
  rec.mean_sensitivity = Sensitivity(*view, stats);
  return rec;
}

double HarmonicIs(const std::array<double, 4>& components,
                  const std::array<double, 4>& weights, double floor) {
  std::array<double, 4> c;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::max(components[i], floor);
  // Scaled by the smallest component so that equal inputs come back exactly.
  const double lo = *std::min_element(c.begin(), c.end());
  double weight_sum = 0.0;
  double ratio_sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    weight_sum += weights[i];
    ratio_sum += weights[i] * (lo / c[i]);
  }
  return lo * (weight_sum / ratio_sum);
}

void ImperceptibilityScore(std::span<MetricRecord> records, const ISConfig& cfg) {
  cfg.Validate();
  for (auto& rec : records) {
    const std::array<double, 4> components = {
        Normalize(rec.mean_l2, cfg.l2_min, cfg.l2_max, cfg.floor),
        rec.sparsity_rate,
        rec.outlier_rate,
        Normalize(rec.mean_sensitivity, cfg.sensitivity_min, cfg.sensitivity_max,
                  cfg.floor),
    };
    rec.is_score = HarmonicIs(components, cfg.weights, cfg.floor);
  }
}

void ImperceptibilityScore(std::span<MetricRecord> records) {
  ImperceptibilityScore(
      records, ISConfig::FromRecords(std::span<const MetricRecord>(records)));
}

double Pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ContractError("pearson: length mismatch");
  if (xs.size() < 2) throw ContractError("pearson: need at least two points");
  const auto constant = [](std::span<const double> v) {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
  };
  if (constant(xs) || constant(ys)) {
    throw StatisticsError("pearson: correlation undefined for zero variance");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace tabadv
