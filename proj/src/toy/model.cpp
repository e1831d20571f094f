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

#include "ranknce/toy/model.hpp"

#include <cmath>

#include "ranknce/error.hpp"
#include "ranknce/ops.hpp"
#include "ranknce/rng.hpp"

namespace ranknce::toy {

void Architecture::validate() const {
  encoder.validate();
  if (disc_channels.empty()) throw ConfigError("discriminator needs at least one stage");
  if (head_width == 0) throw ConfigError("head width must be positive");
  for (std::size_t c : encoder.stage_channels)
    if (c == 0) throw ConfigError("zero encoder channel count");
  for (std::size_t c : decoder_channels)
    if (c == 0) throw ConfigError("zero decoder channel count");
  for (std::size_t c : disc_channels)
    if (c == 0) throw ConfigError("zero discriminator channel count");
}

void ParameterSet::add(std::string name, Tensor value) {
  for (const auto& p : params_) {
    if (p.name == name) throw ConfigError("duplicate parameter " + name);
  }
  params_.push_back(Parameter{std::move(name), std::move(value)});
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw ConfigError("unknown parameter " + name);
}

const Tensor& ParameterSet::get(const std::string& name) const {
  return params_[index_of(name)].value;
}

std::vector<NamedTensor> ParameterSet::to_named() const {
  std::vector<NamedTensor> out;
  for (const auto& p : params_) out.emplace_back(p.name, p.value);
  return out;
}

ParameterSet ParameterSet::from_named(std::vector<NamedTensor> tensors) {
  ParameterSet set;
  for (auto& [name, t] : tensors) set.add(std::move(name), std::move(t));
  return set;
}

bool in_generator_group(const std::string& name) {
  return name.starts_with("gen.") || name.starts_with("head.");
}

bool in_discriminator_group(const std::string& name) {
  return name.starts_with("disc.");
}

namespace {

constexpr double kHeadBias = 0.1;

Tensor normal_tensor(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.normal(0.0, stddev);
  return t;
}

void add_conv(ParameterSet& set, const std::string& prefix, std::size_t cin,
              std::size_t cout, double gain, Rng& rng) {
  const double stddev = std::sqrt(gain / static_cast<double>(cin * 9));
  set.add(prefix + ".kernel", normal_tensor(Shape{cout, cin, 3, 3}, stddev, rng));
  set.add(prefix + ".bias", Tensor(Shape{cout}));
}

}  // namespace

ParameterSet init_parameters(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  ParameterSet set;
  const auto& enc = arch.encoder;
  std::size_t cin = enc.in_channels;
  for (std::size_t s = 0; s < enc.depth(); ++s) {
    add_conv(set, "gen.enc" + std::to_string(s + 1), cin, enc.stage_channels[s], 2.0, rng);
    cin = enc.stage_channels[s];
  }
  for (std::size_t s = 0; s < arch.decoder_channels.size(); ++s) {
    add_conv(set, "gen.dec" + std::to_string(s + 1), cin, arch.decoder_channels[s], 2.0, rng);
    cin = arch.decoder_channels[s];
  }
  add_conv(set, "gen.out", cin, enc.in_channels, 1.0, rng);

  const std::size_t d = arch.head_width;
  for (std::size_t tap : enc.tap_layers) {
    const std::size_t c = enc.stage_channels[tap - 1];
    const std::string p = "head.l" + std::to_string(tap);
    set.add(p + ".w1", normal_tensor(Shape{c, d}, std::sqrt(2.0 / static_cast<double>(c)), rng));
    // Nonzero head biases keep an all-zero activation column from projecting
    // to the zero vector, which normalization rejects.
    set.add(p + ".b1", Tensor(Shape{d}, kHeadBias));
    set.add(p + ".w2", normal_tensor(Shape{d, d}, std::sqrt(1.0 / static_cast<double>(d)), rng));
    set.add(p + ".b2", normal_tensor(Shape{d}, kHeadBias, rng));
  }

  cin = enc.in_channels;
  for (std::size_t s = 0; s < arch.disc_channels.size(); ++s) {
    add_conv(set, "disc.c" + std::to_string(s + 1), cin, arch.disc_channels[s], 2.0, rng);
    cin = arch.disc_channels[s];
  }
  add_conv(set, "disc.out", cin, 1, 1.0, rng);
  return set;
}

BoundModel::BoundModel(Tape& tape, const ParameterSet& params,
                       const Architecture& arch, Trainable trainable)
    : params_(params), arch_(arch) {
  arch_.validate();
  vars_.reserve(params.size());
  for (const auto& p : params) {
    const bool leaf = trainable == Trainable::kAll ||
                      (trainable == Trainable::kGenerator && in_generator_group(p.name)) ||
                      (trainable == Trainable::kDiscriminator &&
                       in_discriminator_group(p.name));
    vars_.push_back(leaf ? tape.leaf(p.value) : tape.constant(p.value));
  }
  auto conv = [&](const std::string& prefix) {
    return features::ConvStage{bind(prefix + ".kernel"), bind(prefix + ".bias")};
  };
  for (std::size_t s = 0; s < arch_.encoder.depth(); ++s)
    encoder_.push_back(conv("gen.enc" + std::to_string(s + 1)));
  for (std::size_t s = 0; s < arch_.decoder_channels.size(); ++s)
    decoder_.push_back(conv("gen.dec" + std::to_string(s + 1)));
  decoder_.push_back(conv("gen.out"));
  for (std::size_t tap : arch_.encoder.tap_layers) {
    const std::string p = "head.l" + std::to_string(tap);
    heads_.push_back({bind(p + ".w1"), bind(p + ".b1"), bind(p + ".w2"), bind(p + ".b2")});
  }
  for (std::size_t s = 0; s < arch_.disc_channels.size(); ++s)
    disc_.push_back(conv("disc.c" + std::to_string(s + 1)));
  disc_.push_back(conv("disc.out"));
}

Var BoundModel::bind(const std::string& name) const {
  return vars_[params_.index_of(name)];
}

std::pair<Var, std::vector<Var>> BoundModel::translate_with_taps(Var image) const {
  std::vector<Var> taps;
  Var h = image;
  std::size_t next_tap = 0;
  const auto& tl = arch_.encoder.tap_layers;
  for (std::size_t s = 0; s < encoder_.size(); ++s) {
    h = ops::relu(ops::conv2d(h, encoder_[s].kernel, encoder_[s].bias));
    if (next_tap < tl.size() && tl[next_tap] == s + 1) {
      taps.push_back(h);
      ++next_tap;
    }
  }
  for (std::size_t s = 0; s + 1 < decoder_.size(); ++s) {
    h = ops::relu(ops::conv2d(h, decoder_[s].kernel, decoder_[s].bias));
  }
  h = ops::tanh(ops::conv2d(h, decoder_.back().kernel, decoder_.back().bias));
  return {h, std::move(taps)};
}

std::vector<Var> BoundModel::encode(Var image) const {
  return features::encode(image, encoder_, arch_.encoder);
}

Var BoundModel::discriminate(Var image) const {
  Var h = image;
  for (std::size_t s = 0; s + 1 < disc_.size(); ++s) {
    h = ops::relu(ops::conv2d(h, disc_[s].kernel, disc_[s].bias));
  }
  return ops::mean(ops::conv2d(h, disc_.back().kernel, disc_.back().bias));
}

Adam::Adam(const ParameterSet& params, bool (*in_group)(const std::string&),
           double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params) {
    active_.push_back(in_group(p.name) ? 1 : 0);
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

void Adam::step(ParameterSet& params, const std::vector<Tensor>& grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!active_[i]) continue;
    auto w = params[i].value.data();
    const auto g = grads[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      w[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps_);
    }
  }
}

}  // namespace ranknce::toy
