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

#include <sstream>

#include <gtest/gtest.h>

#include "check_matchers.hpp"
#include "ranknce/error.hpp"
#include "ranknce/negative_selection.hpp"
#include "ranknce/toy/config.hpp"

namespace ranknce {
namespace {

TEST(ToyI2i, DatasetFixture) { EXPECT_CHECK(verify::check_dataset_fixture()); }
TEST(ToyI2i, DatasetProperties) { EXPECT_CHECK(verify::check_dataset_properties()); }
TEST(ToyI2i, Mmd) { EXPECT_CHECK(verify::check_mmd(23)); }
TEST(ToyI2i, StructureScore) { EXPECT_CHECK(verify::check_structure_score(23)); }
TEST(ToyI2i, TrainingSmoke) { EXPECT_CHECK(verify::check_training_smoke()); }
TEST(ToyI2i, TrainingDeterminism) { EXPECT_CHECK(verify::check_training_determinism()); }

TEST(ToyI2i, ConfigRoundTrip) {
  toy::TrainConfig c;
  toy::apply_config_value(c, "k", "all");
  toy::apply_config_value(c, "theta", "-inf");
  toy::apply_config_value(c, "tap_layers", "2");
  std::stringstream text;
  toy::write_config(text, c);
  const toy::TrainConfig back = toy::parse_config(text);
  std::stringstream again;
  toy::write_config(again, back);
  EXPECT_EQ(text.str(), again.str());
  EXPECT_EQ(back.weights.k, selection::kAllNegatives);
}

TEST(ToyI2i, ConfigRejectsUnknownKeyAndNanTheta) {
  toy::TrainConfig c;
  EXPECT_THROW(toy::apply_config_value(c, "kk", "3"), ConfigError);
  EXPECT_THROW(toy::apply_config_value(c, "theta", "nan"), ConfigError);
  EXPECT_THROW(toy::apply_config_value(c, "k", "0"), ConfigError);
}

}  // namespace
}  // namespace ranknce
