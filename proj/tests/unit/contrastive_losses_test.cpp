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
#include "ranknce/losses.hpp"

namespace ranknce {
namespace {

constexpr std::uint64_t kSeed = 17;

TEST(ContrastiveLosses, ReducesToPatchNce) { EXPECT_CHECK(verify::check_reduction_identity(50, kSeed)); }
TEST(ContrastiveLosses, ClosedForms) { EXPECT_CHECK(verify::check_closed_forms()); }
TEST(ContrastiveLosses, ExtendedPrecision) {
  EXPECT_CHECK(verify::check_nce_extended_precision(kSeed));
}
TEST(ContrastiveLosses, RankNceSubset) { EXPECT_CHECK(verify::check_rank_nce_subset(kSeed)); }
TEST(ContrastiveLosses, MultilayerComposition) {
  EXPECT_CHECK(verify::check_multilayer_composition(kSeed));
}
TEST(ContrastiveLosses, GanOracle) { EXPECT_CHECK(verify::check_gan_oracle(kSeed)); }
TEST(ContrastiveLosses, Monotonicity) { EXPECT_CHECK(verify::check_loss_monotonicity(50, kSeed)); }
TEST(ContrastiveLosses, TauScale) { EXPECT_CHECK(verify::check_tau_scale(50, kSeed)); }
TEST(ContrastiveLosses, BreakdownSums) { EXPECT_CHECK(verify::check_breakdown_sums(kSeed)); }
TEST(ContrastiveLosses, TotalObjective) {
  EXPECT_CHECK(verify::check_total_objective_recomputation(kSeed));
}

TEST(ContrastiveLosses, EqualScoresGiveLogOfCount) {
  Tape tape;
  const auto t = losses::patch_nce(tape.constant(Tensor::vector({0.3})),
                                   tape.constant(Tensor::vector({0.3, 0.3, 0.3})), 0.07);
  EXPECT_NEAR(t.item(), std::log(4.0), 1e-14);
}

TEST(ContrastiveLosses, LargeLogitsStayFinite) {
  Tape tape;
  const auto t = losses::patch_nce(tape.constant(Tensor::vector({1.0})),
                                   tape.constant(Tensor::vector({-1.0})), 1e-3);
  EXPECT_TRUE(std::isfinite(t.item()));
  EXPECT_GE(t.item(), 0.0);
}

}  // namespace
}  // namespace ranknce
