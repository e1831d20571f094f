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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "ranknce/losses.hpp"
#include "ranknce/toy/dataset.hpp"
#include "ranknce/toy/model.hpp"

namespace ranknce::toy {

struct TrainConfig {
  losses::ObjectiveWeights weights;
  losses::NceAggregation aggregation = losses::NceAggregation::kMeanOverLocations;
  losses::GanVariant gan = losses::GanVariant::kNonSaturating;
  bool normalize_features = true;
  std::size_t samples_per_layer = 16;

  std::size_t epochs = 200;
  std::size_t batch = 4;
  std::size_t dataset_size = 16;
  std::size_t eval_size = 16;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;

  Architecture arch;
  DomainSpec domain_x{Texture::kBlobs};
  DomainSpec domain_y{Texture::kStripes};

  std::uint64_t seed_data = 1;
  std::uint64_t seed_init = 2;
  std::uint64_t seed_sample = 3;

  void validate() const;
  // Square images of side n for the encoder and both domains.
  void set_image_size(std::size_t n);
  losses::ObjectiveConfig objective() const;
};

// Flat "key = value" text; '#' starts a comment. Unknown keys are an error.
// Keys not present keep their defaults.
TrainConfig parse_config(std::istream& in);
TrainConfig load_config(const std::filesystem::path& path);
// Applies one key/value pair (the same keys parse_config accepts).
void apply_config_value(TrainConfig& config, const std::string& key,
                        const std::string& value);
// Writes every key in a fixed order; parse_config(write_config(c)) == c.
void write_config(std::ostream& out, const TrainConfig& config);

std::string format_k(std::size_t k);  // "all" for kAllNegatives
std::size_t parse_k(const std::string& text);
double parse_theta(const std::string& text);

}  // namespace ranknce::toy
