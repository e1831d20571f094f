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

#include "ranknce/tensor.hpp"

namespace ranknce::toy {

enum class Texture { kStripes, kChecker, kBlobs };

std::string texture_name(Texture t);
Texture parse_texture(const std::string& name);

/// Procedural image domain. Every image is one soft-edged ellipse (the
/// structure) on a dark background; the ellipse interior carries the domain
/// texture. Pixel value = contrast * (2 * mask * texture - 1) + noise.
struct DomainSpec {
  Texture kind = Texture::kBlobs;
  double period = 4.0;
  double contrast = 0.8;
  double noise_sigma = 0.05;
  std::size_t channels = 1;
  std::size_t height = 16;
  std::size_t width = 16;

  void validate() const;
};

// n images of shape [channels, height, width], deterministic in `seed`.
std::vector<Tensor> make_dataset(const DomainSpec& spec, std::size_t n,
                                 std::uint64_t seed);

}  // namespace ranknce::toy
