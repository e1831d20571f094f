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

#include <gtest/gtest.h>

#include "check_matchers.hpp"
#include "ranknce/error.hpp"
#include "ranknce/patch_features.hpp"
#include "ranknce/rng.hpp"

namespace ranknce {
namespace {

constexpr std::uint64_t kSeed = 11;

TEST(PatchFeatures, EncodeMatchesOracle) { EXPECT_CHECK(verify::check_encode_oracle(kSeed)); }
TEST(PatchFeatures, LocationFixture) { EXPECT_CHECK(verify::check_sample_locations_fixture()); }
TEST(PatchFeatures, LocationProperties) {
  EXPECT_CHECK(verify::check_sample_locations_properties(kSeed));
}
TEST(PatchFeatures, ProjectMatchesReplay) { EXPECT_CHECK(verify::check_project_oracle(kSeed)); }
TEST(PatchFeatures, LocationCoupling) { EXPECT_CHECK(verify::check_location_coupling(kSeed)); }
TEST(PatchFeatures, GradientReachesEncoder) { EXPECT_CHECK(verify::check_gradient_reach(kSeed)); }

TEST(PatchFeatures, SampleAllPositions) {
  Rng rng(3);
  const auto locs = features::sample_locations(6, 6, rng);
  EXPECT_EQ(locs, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
}

TEST(PatchFeatures, OversizedRequestThrows) {
  Rng rng(3);
  EXPECT_THROW(features::sample_locations(4, 5, rng), Error);
}

TEST(PatchFeatures, TapLayersValidated) {
  features::EncoderSpec spec;
  spec.tap_layers = {2, 1};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.tap_layers = {3};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.tap_layers = {1, 2};
  EXPECT_NO_THROW(spec.validate());
}

}  // namespace
}  // namespace ranknce
