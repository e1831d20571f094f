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

#include "ranknce/patch_features.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ranknce/error.hpp"
#include "ranknce/ops.hpp"

namespace ranknce::features {

void EncoderSpec::validate() const {
  if (stage_channels.empty()) throw ConfigError("encoder has no stages");
  if (tap_layers.empty()) throw ConfigError("encoder has no tap layers");
  for (std::size_t i = 0; i < tap_layers.size(); ++i) {
    if (tap_layers[i] < 1 || tap_layers[i] > depth()) {
      throw ConfigError("tap layer " + std::to_string(tap_layers[i]) +
                        " outside encoder depth " + std::to_string(depth()));
    }
    if (i > 0 && tap_layers[i] <= tap_layers[i - 1]) {
      throw ConfigError("tap layers must be strictly increasing");
    }
  }
}

std::vector<Var> encode(Var image, std::span<const ConvStage> stages,
                        const EncoderSpec& spec) {
  spec.validate();
  const Shape expected{spec.in_channels, spec.height, spec.width};
  if (image.shape() != expected) {
    throw ShapeError("encode: image " + shape_string(image.shape()) +
                     " does not match encoder input " + shape_string(expected));
  }
  if (stages.size() != spec.depth()) {
    throw ShapeError("encode: " + std::to_string(stages.size()) +
                     " weight stages for encoder depth " +
                     std::to_string(spec.depth()));
  }
  std::vector<Var> taps;
  Var h = image;
  std::size_t next_tap = 0;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    h = ops::relu(ops::conv2d(h, stages[s].kernel, stages[s].bias));
    if (next_tap < spec.tap_layers.size() && spec.tap_layers[next_tap] == s + 1) {
      taps.push_back(h);
      ++next_tap;
    }
  }
  return taps;
}

std::vector<std::size_t> sample_locations(std::size_t positions,
                                          std::size_t count, Rng& rng) {
  if (count > positions) {
    throw ShapeError("sample_locations: " + std::to_string(count) +
                     " locations requested from " + std::to_string(positions));
  }
  std::vector<std::size_t> pool(positions);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // partial Fisher-Yates
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(positions - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<std::vector<std::size_t>> sample_stack_locations(
    std::span<const Var> activations, std::size_t count, Rng& rng) {
  std::vector<std::vector<std::size_t>> result;
  result.reserve(activations.size());
  for (const Var& a : activations) {
    if (a.value().rank() != 3) throw ShapeError("activation map must be [C,H,W]");
    result.push_back(sample_locations(a.value().dim(1) * a.value().dim(2), count, rng));
  }
  return result;
}

Var project_layer(Var activation, std::span<const std::size_t> locations,
                  const ProjectionHead& head, bool normalize) {
  const Tensor& act = activation.value();
  if (act.rank() != 3) throw ShapeError("project: activation must be [C,H,W]");
  const std::size_t channels = act.dim(0);
  const std::size_t positions = act.dim(1) * act.dim(2);
  if (head.w1.value().rank() != 2 || head.w1.value().dim(0) != channels) {
    throw ShapeError("project: head input width " +
                     shape_string(head.w1.shape()) + " does not match " +
                     std::to_string(channels) + " channels");
  }
  std::vector<std::size_t> idx;
  idx.reserve(locations.size() * channels);
  for (std::size_t loc : locations) {
    if (loc >= positions) {
      throw ShapeError("project: location " + std::to_string(loc) +
                       " out of range for " + shape_string(act.shape()));
    }
    for (std::size_t c = 0; c < channels; ++c) idx.push_back(c * positions + loc);
  }
  Var rows = ops::reshape(ops::gather(activation, std::move(idx)),
                          Shape{locations.size(), channels});
  Var hidden = ops::relu(ops::add_row_bias(ops::matmul(rows, head.w1), head.b1));
  Var out = ops::add_row_bias(ops::matmul(hidden, head.w2), head.b2);
  return normalize ? ops::l2_normalize_rows(out) : out;
}

FeatureStack project(std::span<const Var> activations,
                     std::span<const std::vector<std::size_t>> locations,
                     std::span<const ProjectionHead> heads,
                     std::span<const std::size_t> layer_ids, bool normalize) {
  if (activations.size() != locations.size() ||
      activations.size() != heads.size() ||
      activations.size() != layer_ids.size()) {
    throw ShapeError("project: activations, locations, heads and layer ids differ in count");
  }
  FeatureStack stack;
  stack.normalized = normalize;
  for (std::size_t l = 0; l < activations.size(); ++l) {
    stack.layers.push_back(FeatureLayer{
        layer_ids[l], locations[l],
        project_layer(activations[l], locations[l], heads[l], normalize)});
  }
  return stack;
}

}  // namespace ranknce::features
