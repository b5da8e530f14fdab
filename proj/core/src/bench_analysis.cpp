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

#include <algorithm>
#include <map>
#include <tuple>

#include "tabadv/bench.hpp"
#include "tabadv/error.hpp"

namespace tabadv {
namespace {

double MetricValue(const RunRecord& r, std::size_t k) {
  switch (k) {
    case 0: return r.metrics.mean_l2;
    case 1: return r.metrics.sparsity_rate;
    case 2: return r.metrics.mean_sensitivity;
    case 3: return r.metrics.outlier_rate;
    default: return r.metrics.is_score.value_or(0.0);
  }
}

}  // namespace

double PlateauSelect(std::span<const std::pair<double, double>> curve, double delta) {
  if (curve.size() < 2) throw ContractError("plateau_select: need at least two points");
  if (!(delta > 0.0)) throw ContractError("plateau_select: delta must be > 0");
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (!(curve[i - 1].first < curve[i].first)) {
      throw ContractError("plateau_select: epsilons must be strictly ascending");
    }
  }
  for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
    bool flat = true;
    for (std::size_t j = k + 1; j < curve.size() && flat; ++j) {
      flat = curve[j].second - curve[k].second < delta;
    }
    if (flat) return curve[k].first;
  }
  return curve.back().first;
}

double RepresentativeEpsilon(std::span<const double> selections) {
  if (selections.empty()) throw ContractError("representative_epsilon: no selections");
  std::map<double, std::size_t> counts;
  for (const double e : selections) ++counts[e];
  // std::map iterates in ascending epsilon, so strict > keeps the smaller one.
  double best = counts.begin()->first;
  std::size_t best_count = 0;
  for (const auto& [eps, count] : counts) {
    if (count > best_count) {
      best = eps;
      best_count = count;
    }
  }
  return best;
}

const char* QuadrantName(Quadrant q) {
  switch (q) {
    case Quadrant::kEffImp: return "EffImp";
    case Quadrant::kEffPer: return "EffPer";
    case Quadrant::kIneffImp: return "IneffImp";
    case Quadrant::kIneffPer: return "IneffPer";
  }
  return "unknown";
}

Quadrant QuadrantClassify(double asr, double is_score, const QuadrantThresholds& th) {
  const bool effective = asr > th.asr;
  const bool imperceptible = is_score < th.is;
  if (effective) return imperceptible ? Quadrant::kEffImp : Quadrant::kEffPer;
  return imperceptible ? Quadrant::kIneffImp : Quadrant::kIneffPer;
}

Quadrant QuadrantClassify(const RunRecord& record, const QuadrantThresholds& th) {
  if (!record.metrics.is_score) {
    throw ContractError("quadrant_classify: record has no imperceptibility score");
  }
  return QuadrantClassify(record.metrics.asr, *record.metrics.is_score, th);
}

std::optional<QuadrantThresholds> ThresholdsFromBaseline(
    std::span<const RunRecord> records) {
  std::optional<QuadrantThresholds> th;
  for (const auto& r : records) {
    if (r.attack != AttackMethod::kGaussian || !r.metrics.is_score) continue;
    if (!th) {
      th = QuadrantThresholds{r.metrics.asr, *r.metrics.is_score};
    } else {
      th->asr = std::max(th->asr, r.metrics.asr);
      th->is = std::min(th->is, *r.metrics.is_score);
    }
  }
  return th;
}

std::vector<CorrelationRow> CorrelationTable(std::span<const RunRecord> records) {
  std::map<AttackMethod, std::vector<const RunRecord*>> by_attack;
  for (const auto& r : records) by_attack[r.attack].push_back(&r);

  std::vector<CorrelationRow> table;
  for (const auto& [attack, rows] : by_attack) {
    CorrelationRow row;
    row.attack = attack;
    row.samples = rows.size();
    std::vector<double> asr;
    for (const auto* r : rows) asr.push_back(r->metrics.asr);
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t k = 0; k < kCorrelatedMetrics.size(); ++k) {
      std::vector<double> ys;
      for (const auto* r : rows) ys.push_back(MetricValue(*r, k));
      try {
        row.r[k] = Pearson(asr, ys);
        sum += *row.r[k];
        ++defined;
      } catch (const Error&) {
        row.r[k] = std::nullopt;
      }
    }
    if (defined > 0) row.average = sum / static_cast<double>(defined);
    table.push_back(row);
  }
  return table;
}

Analyses Analyze(std::span<const RunRecord> records, double plateau_delta,
                 std::optional<QuadrantThresholds> fixed) {
  Analyses out;

  // One ASR curve per (dataset, model, attack), in epsilon order.
  std::map<std::tuple<std::string, std::string, AttackMethod>,
           std::vector<std::pair<double, double>>>
      curves;
  for (const auto& r : records) {
    curves[{r.dataset, r.model, r.attack}].emplace_back(r.epsilon, r.metrics.asr);
  }
  std::map<AttackMethod, std::vector<double>> selections;
  for (auto& [key, curve] : curves) {
    std::sort(curve.begin(), curve.end());
    const auto& [dataset, model, attack] = key;
    const double eps = curve.size() >= 2 ? PlateauSelect(curve, plateau_delta)
                                         : curve.front().first;
    out.plateaus.push_back({dataset, model, attack, eps});
    selections[attack].push_back(eps);
  }
  for (const auto& [attack, eps] : selections) {
    out.representative_epsilon[attack] = RepresentativeEpsilon(eps);
  }

  if (fixed) {
    out.thresholds = *fixed;
  } else if (const auto th = ThresholdsFromBaseline(records)) {
    out.thresholds = *th;
    out.thresholds_from_baseline = true;
  } else {
    out.thresholds = QuadrantThresholds::Preset();
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.quadrants.push_back({i, QuadrantClassify(records[i], out.thresholds)});
  }

  out.correlations = CorrelationTable(records);
  return out;
}

}  // namespace tabadv
