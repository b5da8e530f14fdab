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

// Brute-force reference metrics. They share no code with the library: the
// covariance is inverted by Gauss-Jordan elimination and the chi-squared
// quantile comes from Boost.Math.

#ifndef TABADV_TESTS_METRIC_ORACLES_HPP_
#define TABADV_TESTS_METRIC_ORACLES_HPP_

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "tabadv/attacks.hpp"
#include "tabadv/schema_data.hpp"

namespace tabadv::oracle {

inline double Asr(const AdversarialBatch& b) {
  int hits = 0;
  for (const auto& ex : b.examples) hits += ex.success ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(b.examples.size());
}

inline double MeanNorm(const AdversarialBatch& b, int p) {
  double total = 0.0;
  for (const auto& ex : b.examples) {
    double acc = 0.0;
    for (std::size_t j = 0; j < ex.x.size(); ++j) {
      const double d = std::abs(ex.x_adv[j] - ex.x[j]);
      if (p == 1) acc += d;
      if (p == 2) acc += d * d;
      if (p == 0 && d > acc) acc = d;
    }
    total += p == 2 ? std::sqrt(acc) : acc;
  }
  return total / static_cast<double>(b.examples.size());
}

// Returns {overall, numerical, categorical} as exact fractions of counts.
inline std::vector<double> Sparsity(const AdversarialBatch& b, const EncodingMap& enc,
                                    double tol) {
  double overall = 0.0;
  double num = 0.0;
  double cat = 0.0;
  std::size_t num_count = 0;
  std::size_t cat_count = 0;
  for (const auto& s : enc.spans) (s.kind == FeatureKind::kNumerical ? num_count : cat_count)++;
  for (const auto& ex : b.examples) {
    std::size_t changed = 0;
    std::size_t num_changed = 0;
    std::size_t cat_changed = 0;
    for (const auto& s : enc.spans) {
      bool any = false;
      for (std::size_t j = s.begin; j < s.end; ++j) {
        if (std::abs(ex.x_adv[j] - ex.x[j]) > tol) {
          ++changed;
          any = true;
          if (s.kind == FeatureKind::kNumerical) ++num_changed;
        }
      }
      if (any && s.kind == FeatureKind::kCategorical) ++cat_changed;
    }
    overall += static_cast<double>(changed) / static_cast<double>(enc.d_total);
    if (num_count) num += static_cast<double>(num_changed) / static_cast<double>(num_count);
    if (cat_count) cat += static_cast<double>(cat_changed) / static_cast<double>(cat_count);
  }
  const double n = static_cast<double>(b.examples.size());
  return {overall / n, num / n, cat / n};
}

inline std::vector<std::vector<double>> Inverse(const Matrix& m) {
  const std::size_t d = m.rows();
  std::vector<std::vector<double>> a(d, std::vector<double>(2 * d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) a[i][j] = m(i, j);
    a[i][d + i] = 1.0;
  }
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < d; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
    }
    std::swap(a[c], a[pivot]);
    const double p = a[c][c];
    for (auto& v : a[c]) v /= p;
    for (std::size_t r = 0; r < d; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      for (std::size_t k = 0; k < 2 * d; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<std::vector<double>> inv(d, std::vector<double>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) inv[i][j] = a[i][d + j];
  }
  return inv;
}

inline double MahalanobisSquared(const std::vector<double>& x, const DataStatistics& s,
                                 const std::vector<std::vector<double>>& inv) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      acc += (x[i] - s.mu[i]) * inv[i][j] * (x[j] - s.mu[j]);
    }
  }
  return acc;
}

inline double Chi2Quantile(double alpha, std::size_t df) {
  const boost::math::chi_squared dist(static_cast<double>(df));
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

inline double OutlierRate(const AdversarialBatch& b, const DataStatistics& s, double alpha) {
  const auto inv = Inverse(s.sigma_cov);
  const double c = Chi2Quantile(alpha, s.mu.size());
  int flagged = 0;
  for (const auto& ex : b.examples) flagged += MahalanobisSquared(ex.x_adv, s, inv) > c;
  return static_cast<double>(flagged) / static_cast<double>(b.examples.size());
}

inline double Sensitivity(const AdversarialBatch& b, const DataStatistics& s) {
  double total = 0.0;
  for (const auto& ex : b.examples) {
    for (std::size_t k = 0; k < s.numerical_columns.size(); ++k) {
      const std::size_t j = s.numerical_columns[k];
      total += std::abs(ex.x_adv[j] - ex.x[j]) / s.sigma_feat[k];
    }
  }
  return total / static_cast<double>(b.examples.size());
}

// A random metric problem: an encoding over <= 8 columns with numerical and
// categorical spans, statistics fitted on a reference sample and a batch of
// <= 20 examples whose perturbations leave some coordinates untouched.
struct MetricProblem {
  EncodingMap encoding;
  DataStatistics stats;
  AdversarialBatch batch;
};

inline MetricProblem RandomMetricProblem(std::mt19937_64& gen) {
  MetricProblem p;
  std::uniform_int_distribution<int> cols_dist(2, 8);
  const std::size_t d = static_cast<std::size_t>(cols_dist(gen));
  std::size_t col = 0;
  std::size_t feature = 0;
  while (col < d) {
    const std::size_t left = d - col;
    const bool cat = left >= 2 && std::bernoulli_distribution(0.4)(gen);
    const std::size_t width =
        cat ? std::uniform_int_distribution<std::size_t>(2, std::min<std::size_t>(3, left))(gen)
            : 1;
    p.encoding.spans.push_back({feature++, cat ? FeatureKind::kCategorical
                                               : FeatureKind::kNumerical,
                                col, col + width});
    if (cat) p.encoding.d_encoded += width;
    col += width;
  }
  p.encoding.d_total = d;

  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix sample(60, d);
  for (std::size_t r = 0; r < sample.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) sample(r, j) = u(gen);
  }
  p.stats = FitStatistics(sample, p.encoding.NumericalColumns());

  const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 20)(gen);
  for (std::size_t i = 0; i < n; ++i) {
    AdversarialExample ex;
    ex.instance_id = i;
    ex.x.resize(d);
    ex.x_adv.resize(d);
    ex.delta.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      ex.x[j] = u(gen);
      const double r = u(gen);
      // A third unchanged, a sixth below tolerance, the rest moved; some
      // moves are large enough to leave the training distribution.
      double step = 0.0;
      if (r > 0.5) step = (u(gen) - 0.5) * (r > 0.9 ? 6.0 : 0.6);
      else if (r > 0.33) step = 1e-12;
      ex.x_adv[j] = ex.x[j] + step;
      ex.delta[j] = ex.x_adv[j] - ex.x[j];
    }
    ex.success = u(gen) < 0.6;
    p.batch.examples.push_back(std::move(ex));
  }
  return p;
}

}  // namespace tabadv::oracle

#endif  // TABADV_TESTS_METRIC_ORACLES_HPP_
