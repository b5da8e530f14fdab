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

#ifndef TABADV_SPECIAL_FUNCTIONS_HPP_
#define TABADV_SPECIAL_FUNCTIONS_HPP_

#include <cstddef>

namespace tabadv {

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
// Series expansion below x = a + 1, Lentz continued fraction above.
double RegularizedGammaP(double a, double x);
// Q(a, x) = 1 - P(a, x), computed without cancellation.
double RegularizedGammaQ(double a, double x);

// Upper-tail chi-squared CDF: P(X > x) for X ~ chi2(df).
double Chi2Survival(double x, std::size_t df);

// The value c with P(chi2(df) > c) = alpha, found by bisection to an
// absolute tolerance of 1e-6. Requires 0 < alpha < 1 and df >= 1.
double Chi2Critical(double alpha, std::size_t df);

}  // namespace tabadv

#endif  // TABADV_SPECIAL_FUNCTIONS_HPP_
