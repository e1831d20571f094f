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

#include "ranknce/toy/dataset.hpp"

#include <cmath>
#include <numbers>

#include "ranknce/error.hpp"
#include "ranknce/rng.hpp"

namespace ranknce::toy {

std::string texture_name(Texture t) {
  switch (t) {
    case Texture::kStripes: return "stripes";
    case Texture::kChecker: return "checker";
    case Texture::kBlobs: return "blobs";
  }
  return "?";
}

Texture parse_texture(const std::string& name) {
  if (name == "stripes") return Texture::kStripes;
  if (name == "checker") return Texture::kChecker;
  if (name == "blobs") return Texture::kBlobs;
  throw ConfigError("unknown texture kind '" + name + "'");
}

void DomainSpec::validate() const {
  if (channels == 0 || height < 3 || width < 3) {
    throw ConfigError("domain image extents must be at least 1x3x3");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (!(period > 0.0)) throw ConfigError("texture period must be positive");
  if (!std::isfinite(contrast)) throw ConfigError("contrast must be finite");
}

std::vector<Tensor> make_dataset(const DomainSpec& spec, std::size_t n,
                                 std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw ConfigError("dataset size must be at least 1");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double h = static_cast<double>(spec.height);
  const double w = static_cast<double>(spec.width);
  const double extent = std::min(h, w);
  Rng rng(seed);
  std::vector<Tensor> images;
  images.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double cx = rng.uniform(0.3 * w, 0.7 * w);
    const double cy = rng.uniform(0.3 * h, 0.7 * h);
    const double rx = rng.uniform(0.2 * extent, 0.35 * extent);
    const double ry = rng.uniform(0.2 * extent, 0.35 * extent);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double phase_a = rng.uniform(0.0, kTwoPi);
    const double phase_b = rng.uniform(0.0, kTwoPi);
    const double sharpness = rx + ry;

    Tensor img(Shape{spec.channels, spec.height, spec.width});
    for (std::size_t y = 0; y < spec.height; ++y) {
      for (std::size_t x = 0; x < spec.width; ++x) {
        const double px = static_cast<double>(x) + 0.5;
        const double py = static_cast<double>(y) + 0.5;
        const double dx = (px - cx) / rx;
        const double dy = (py - cy) / ry;
        const double dist = std::sqrt(dx * dx + dy * dy);
        const double mask = 1.0 / (1.0 + std::exp(-sharpness * (1.0 - dist)));
        double texture = 1.0;
        switch (spec.kind) {
          case Texture::kStripes: {
            const double u = px * std::cos(angle) + py * std::sin(angle);
            texture = 0.5 + 0.5 * std::cos(kTwoPi * u / spec.period + phase_a);
            break;
          }
          case Texture::kChecker: {
            const double s = std::sin(kTwoPi * px / spec.period + phase_a) *
                             std::sin(kTwoPi * py / spec.period + phase_b);
            texture = s >= 0.0 ? 1.0 : 0.0;
            break;
          }
          case Texture::kBlobs:
            break;
        }
        const double base = spec.contrast * (2.0 * mask * texture - 1.0);
        for (std::size_t c = 0; c < spec.channels; ++c) {
          img.at(c, y, x) = spec.noise_sigma > 0.0
                                ? base + spec.noise_sigma * rng.normal()
                                : base;
        }
      }
    }
    images.push_back(std::move(img));
  }
  return images;
}

}  // namespace ranknce::toy
