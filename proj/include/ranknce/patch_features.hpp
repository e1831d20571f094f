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

#include <cstddef>
#include <span>
#include <vector>

#include "ranknce/rng.hpp"
#include "ranknce/tape.hpp"

namespace ranknce::features {

/// Shape of the convolutional encoder whose stage outputs feed the
/// contrastive loss. Stages are 3x3 conv + relu; tap layers are 1-based
/// stage indices.
struct EncoderSpec {
  std::size_t in_channels = 1;
  std::size_t height = 16;
  std::size_t width = 16;
  std::vector<std::size_t> stage_channels{8, 16};
  std::vector<std::size_t> tap_layers{1, 2};

  std::size_t depth() const { return stage_channels.size(); }
  // Throws ConfigError unless taps are nonempty, strictly increasing and
  // within depth.
  void validate() const;
};

struct ConvStage {
  Var kernel;  // [C_out, C_in, 3, 3]
  Var bias;    // [C_out]
};

/// Two-layer perceptron: relu(x W1 + b1) W2 + b2.
struct ProjectionHead {
  Var w1;  // [C_l, D]
  Var b1;  // [D]
  Var w2;  // [D, D]
  Var b2;  // [D]
};

// Projected patch features of one tap layer: one row per sampled location.
struct FeatureLayer {
  std::size_t layer = 0;
  std::vector<std::size_t> locations;
  Var features;  // [S_l, D]
};

struct FeatureStack {
  std::vector<FeatureLayer> layers;
  bool normalized = false;
};

std::vector<Var> encode(Var image, std::span<const ConvStage> stages,
                        const EncoderSpec& spec);

// `count` distinct flat spatial indices in [0, positions), uniform without
// replacement, returned in ascending order.
std::vector<std::size_t> sample_locations(std::size_t positions,
                                          std::size_t count, Rng& rng);

// Samples one location set per activation map ([C,H,W] each).
std::vector<std::vector<std::size_t>> sample_stack_locations(
    std::span<const Var> activations, std::size_t count, Rng& rng);

Var project_layer(Var activation, std::span<const std::size_t> locations,
                  const ProjectionHead& head, bool normalize);

FeatureStack project(std::span<const Var> activations,
                     std::span<const std::vector<std::size_t>> locations,
                     std::span<const ProjectionHead> heads,
                     std::span<const std::size_t> layer_ids, bool normalize);

}  // namespace ranknce::features
