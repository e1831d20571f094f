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
#include <cstdint>
#include <string>
#include <vector>

#include "ranknce/losses.hpp"
#include "ranknce/patch_features.hpp"
#include "ranknce/tensor_io.hpp"

namespace ranknce::toy {

/// Generator = encoder (3x3 conv + relu stages) + decoder (conv + relu stages,
/// then a conv to image channels with tanh). Discriminator = conv + relu
/// stages, a conv to one channel, and a global mean as the logit. One
/// projection head per encoder tap.
struct Architecture {
  features::EncoderSpec encoder;
  std::vector<std::size_t> decoder_channels{8};
  std::vector<std::size_t> disc_channels{8, 16};
  std::size_t head_width = 32;

  void validate() const;
};

struct Parameter {
  std::string name;
  Tensor value;
};

// Ordered, named parameter tensors. Names are prefixed by group:
// "gen." (encoder + decoder), "head." and "disc.".
class ParameterSet {
 public:
  void add(std::string name, Tensor value);
  std::size_t size() const { return params_.size(); }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Tensor& get(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::vector<NamedTensor> to_named() const;
  static ParameterSet from_named(std::vector<NamedTensor> tensors);

 private:
  std::vector<Parameter> params_;
};

bool in_generator_group(const std::string& name);  // gen.* and head.*
bool in_discriminator_group(const std::string& name);

ParameterSet init_parameters(const Architecture& arch, std::uint64_t seed);

enum class Trainable { kNone, kGenerator, kDiscriminator, kAll };

/// The toy networks bound to one tape. Parameters of the trainable group
/// become leaves, the rest constants.
class BoundModel final : public losses::TranslationModel {
 public:
  BoundModel(Tape& tape, const ParameterSet& params, const Architecture& arch,
             Trainable trainable);

  std::pair<Var, std::vector<Var>> translate_with_taps(Var image) const override;
  std::vector<Var> encode(Var image) const override;
  Var discriminate(Var image) const override;
  std::span<const features::ProjectionHead> heads() const override { return heads_; }
  std::vector<std::size_t> tap_layers() const override {
    return arch_.encoder.tap_layers;
  }

  Var translate(Var image) const { return translate_with_taps(image).first; }
  // Var bound to parameter i of the set given at construction.
  const Var& param(std::size_t i) const { return vars_[i]; }

 private:
  Var bind(const std::string& name) const;

  const ParameterSet& params_;
  Architecture arch_;
  std::vector<Var> vars_;
  std::vector<features::ConvStage> encoder_;
  std::vector<features::ConvStage> decoder_;
  std::vector<features::ConvStage> disc_;
  std::vector<features::ProjectionHead> heads_;
};

/// Adam over the parameters of one group.
class Adam {
 public:
  Adam(const ParameterSet& params, bool (*in_group)(const std::string&),
       double beta1, double beta2, double eps = 1e-8);

  // grads[i] is the gradient of parameter i (ignored outside the group).
  void step(ParameterSet& params, const std::vector<Tensor>& grads, double lr);

 private:
  std::vector<std::uint8_t> active_;
  std::vector<Tensor> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

}  // namespace ranknce::toy
