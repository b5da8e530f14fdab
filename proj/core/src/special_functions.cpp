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

#include "tabadv/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tabadv/error.hpp"

namespace tabadv {
namespace {

constexpr int kMaxIterations = 10000;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = std::numeric_limits<double>::min() / kEps;

double GammaSeries(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 0; n < kMaxIterations; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double GammaContinuedFraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void CheckArgs(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) {
    throw ContractError("incomplete gamma: need a > 0 and x >= 0");
  }
}

}  // namespace

double RegularizedGammaP(double a, double x) {
  CheckArgs(a, x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return GammaSeries(a, x);
  return 1.0 - GammaContinuedFraction(a, x);
}

double RegularizedGammaQ(double a, double x) {
  CheckArgs(a, x);
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - GammaSeries(a, x);
  return GammaContinuedFraction(a, x);
}

double Chi2Survival(double x, std::size_t df) {
  if (df == 0) throw ContractError("chi2: df must be >= 1");
  if (x <= 0.0) return 1.0;
  return RegularizedGammaQ(0.5 * static_cast<double>(df), 0.5 * x);
}

double Chi2Critical(double alpha, std::size_t df) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ContractError("chi2_critical: alpha must lie in (0, 1)");
  }
  if (df == 0) throw ContractError("chi2_critical: df must be >= 1");
  double lo = 0.0;
  double hi = static_cast<double>(df) + 10.0;
  while (Chi2Survival(hi, df) > alpha) hi *= 2.0;
  // The survival function is decreasing in x.
  while (hi - lo > 1e-9 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (Chi2Survival(mid, df) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace tabadv
