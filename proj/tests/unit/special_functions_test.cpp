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

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <gtest/gtest.h>

#include "tabadv/error.hpp"

namespace tabadv {
namespace {

TEST(RegularizedGammaTest, MatchesBoost) {
  for (const double a : {0.5, 1.0, 2.5, 5.0, 52.5}) {
    for (const double x : {0.01, 0.5, 1.0, 3.0, 10.0, 60.0, 200.0}) {
      EXPECT_NEAR(RegularizedGammaP(a, x), boost::math::gamma_p(a, x), 1e-12)
          << "a=" << a << " x=" << x;
      EXPECT_NEAR(RegularizedGammaQ(a, x), boost::math::gamma_q(a, x), 1e-12)
          << "a=" << a << " x=" << x;
    }
  }
}

TEST(RegularizedGammaTest, EdgeValues) {
  EXPECT_EQ(RegularizedGammaP(3.0, 0.0), 0.0);
  EXPECT_EQ(RegularizedGammaQ(3.0, 0.0), 1.0);
}

TEST(Chi2Test, CriticalValueExamples) {
  EXPECT_NEAR(Chi2Critical(0.05, 1), 3.841, 0.01);
  EXPECT_NEAR(Chi2Critical(0.05, 10), 18.307, 0.01);
}

TEST(Chi2Test, CriticalMatchesBoostQuantile) {
  for (const std::size_t df : {1u, 2u, 10u, 30u, 105u, 400u}) {
    for (const double alpha : {0.001, 0.01, 0.05, 0.5, 0.9}) {
      const boost::math::chi_squared dist(static_cast<double>(df));
      const double expected = boost::math::quantile(boost::math::complement(dist, alpha));
      EXPECT_NEAR(Chi2Critical(alpha, df), expected, 1e-6 * std::max(1.0, expected))
          << "df=" << df << " alpha=" << alpha;
    }
  }
}

TEST(Chi2Test, SurvivalInvertsCritical) {
  const double c = Chi2Critical(0.05, 105);
  EXPECT_NEAR(Chi2Survival(c, 105), 0.05, 1e-9);
}

TEST(Chi2Test, AlphaNearOneGivesSmallCritical) {
  EXPECT_LT(Chi2Critical(1.0 - 1e-9, 3), 1e-2);
}

TEST(Chi2Test, InvalidArguments) {
  EXPECT_THROW(Chi2Critical(0.0, 3), ContractError);
  EXPECT_THROW(Chi2Critical(1.0, 3), ContractError);
  EXPECT_THROW(Chi2Critical(0.05, 0), ContractError);
}

}  // namespace
}  // namespace tabadv
