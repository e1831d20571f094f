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
#include <limits>

#include <gtest/gtest.h>

#include "check_matchers.hpp"
#include "ranknce/error.hpp"
#include "ranknce/negative_selection.hpp"

namespace ranknce {
namespace {

constexpr std::uint64_t kSeed = 13;

TEST(NegativeSelection, SimilarityExamples) { EXPECT_CHECK(verify::check_similarity_examples(kSeed)); }
TEST(NegativeSelection, PruneExamples) { EXPECT_CHECK(verify::check_prune_examples()); }
TEST(NegativeSelection, MonotonePruning) { EXPECT_CHECK(verify::check_monotone_pruning(50, kSeed)); }
TEST(NegativeSelection, TopKOracle) { EXPECT_CHECK(verify::check_topk_oracle(500, kSeed)); }
TEST(NegativeSelection, AntiLeak) { EXPECT_CHECK(verify::check_anti_leak(50, kSeed)); }
TEST(NegativeSelection, ScaleInvariance) {
  EXPECT_CHECK(verify::check_selection_scale_invariance(50, kSeed));
}
TEST(NegativeSelection, ComposedOracle) { EXPECT_CHECK(verify::check_selection_fixture(kSeed)); }

TEST(NegativeSelection, TiesBreakByIndex) {
  const std::vector<double> scores{0.5, 0.9, 0.5, 0.9, 0.1};
  const std::vector<std::uint8_t> eligible{1, 1, 1, 1, 1};
  EXPECT_EQ(selection::top_k_indices(scores, eligible, 3), (std::vector<std::size_t>{1, 3, 0}));
}

TEST(NegativeSelection, IneligibleNeverSelected) {
  const std::vector<double> scores{0.5, 0.9, 0.7};
  const std::vector<std::uint8_t> eligible{1, 0, 1};
  EXPECT_EQ(selection::top_k_indices(scores, eligible, 5), (std::vector<std::size_t>{2, 0}));
}

class TwoByTwo : public ::testing::Test {
 protected:
  // fake = I, real rows (0.8,0.6) and (0.7,-0.8): scores [[.8,.7],[.6,-.8]]
  Tape tape;
  selection::SimilarityMatrix sim = selection::similarity_matrix(
      tape.constant(Tensor::identity(2)),
      tape.constant(Tensor::matrix(2, 2, {0.8, 0.6, 0.7, -0.8})));
};

TEST_F(TwoByTwo, PositivesOnDiagonal) {
  EXPECT_DOUBLE_EQ(sim.positives.value()[0], 0.8);
  EXPECT_DOUBLE_EQ(sim.positives.value()[1], -0.8);
  EXPECT_DOUBLE_EQ(sim.score(0, 1), 0.7);
  EXPECT_DOUBLE_EQ(sim.score(1, 0), 0.6);
  EXPECT_FALSE(sim.is_eligible(0, 0));
}

TEST_F(TwoByTwo, ThetaSplitsRows) {
  const auto pruned = selection::prune(sim, 0.65);
  EXPECT_FALSE(pruned.is_pruned(0, 1));
  EXPECT_TRUE(pruned.is_pruned(1, 0));
  EXPECT_THROW(selection::rank_topk(pruned, 1), SelectionError);
  const auto kept = selection::rank_topk(pruned, 1, selection::EmptyRowPolicy::kKeep);
  EXPECT_EQ(kept.rows[0].indices, std::vector<std::size_t>{1});
  EXPECT_TRUE(kept.rows[1].indices.empty());
}

TEST_F(TwoByTwo, NanThetaRejected) {
  EXPECT_THROW(selection::prune(sim, std::nan("")), Error);
  EXPECT_NO_THROW(selection::prune(sim, std::numeric_limits<double>::infinity()));
}

}  // namespace
}  // namespace ranknce
