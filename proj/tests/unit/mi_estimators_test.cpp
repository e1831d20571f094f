// Copyright 2026 The RankNCE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include <gtest/gtest.h>

#include "check_matchers.hpp"
#include "ranknce/mi_estimators.hpp"
#include "ranknce/verify/fixtures.hpp"

namespace ranknce {
namespace {

constexpr std::uint64_t kSeed = 19;

TEST(MiEstimators, NegatedLossIsBound) { EXPECT_CHECK(verify::check_negated_loss_is_bound(500, kSeed)); }
TEST(MiEstimators, RankingConsistency) { EXPECT_CHECK(verify::check_ranking_consistency(500, kSeed)); }
TEST(MiEstimators, MultisampleBound) { EXPECT_CHECK(verify::check_multisample_bound(kSeed)); }
TEST(MiEstimators, ConditionalProbs) { EXPECT_CHECK(verify::check_conditional_probs(kSeed)); }
TEST(MiEstimators, DualRoute) { EXPECT_CHECK(verify::check_bound_dual_route(kSeed)); }
TEST(MiEstimators, IndependentBoundNearZero) {
  EXPECT_CHECK(verify::check_independent_bound(10000, 4242, verify::kIndependenceTau,
                                               verify::kIndependenceDim));
}

TEST(MiEstimators, EqualScoresOffsetBoundIsZero) {
  const std::vector<double> pos{0.2, 0.2};
  const std::vector<std::vector<double>> neg{{0.2, 0.2, 0.2}, {0.2, 0.2, 0.2}};
  EXPECT_NEAR(mi::infonce_bound(pos, neg, 0.07, true), 0.0, 1e-15);
  EXPECT_NEAR(mi::infonce_bound(pos, neg, 0.07, false), -std::log(4.0), 1e-15);
}

TEST(MiEstimators, ConditionalProbsSumToOne) {
  const std::vector<double> neg{0.1, -0.4, 0.9};
  const auto p = mi::conditional_probs(0.5, neg, 0.5);
  double total = 0.0;
  for (double v : p) total += v;
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_GT(p[3], p[0]);
}

}  // namespace
}  // namespace ranknce
