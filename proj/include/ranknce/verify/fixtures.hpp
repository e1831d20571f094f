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

// Values generated once from the seeded streams and frozen. A change here
// means the random streams or the generators changed behaviour.

#include <array>
#include <cstddef>
#include <cstdint>

namespace ranknce::verify {

inline constexpr std::uint64_t kLocationFixtureSeed = 20240607;
// sample_locations(256, 16, Rng(kLocationFixtureSeed))
inline constexpr std::array<std::size_t, 16> kLocationFixture{
    24, 63, 75, 97, 115, 121, 153, 160, 162, 166, 168, 196, 209, 213, 234, 236};

inline constexpr std::uint64_t kStripesFixtureSeed = 11;
// make_dataset(stripes, sigma 0, 8x8, n=1, kStripesFixtureSeed)
// Pixels are stored as hex literals so the comparison is bit-exact.
inline constexpr std::array<double, 64> kStripesFixture{
    -0x1.996073c88a2f7p-1, -0x1.961f29d728fdbp-1, -0x1.858f13122b0e4p-1, -0x1.8a42ad6a3eaeap-1,
    -0x1.98c5c99c5c018p-1, -0x1.98b3ada9132a7p-1, -0x1.98b53c0384b96p-1, -0x1.997230df09972p-1,
    -0x1.997baceb3d446p-1, -0x1.7f5269a9e3ce8p-1, -0x1.26428e2966973p-1, -0x1.550af8fc27bep-1,
    -0x1.98a8fa20912fdp-1, -0x1.93b54fc0dfa22p-1, -0x1.964fbffe9450dp-1, -0x1.993946ff2943p-1,
    -0x1.9949b772a5e82p-1, -0x1.1527642060ce7p-1, 0x1.5d6968cce6ccdp-8, -0x1.bb38d5278bcddp-2,
    -0x1.998ec4849df77p-1, -0x1.7e09651fc7b8fp-1, -0x1.90392f39960f7p-1, -0x1.98e62c737609p-1,
    -0x1.926f88bbc6ac3p-1, -0x1.e54e226b36c9ap-4, 0x1.0ca5cb04ef67bp-1, -0x1.69d039a930f9fp-2,
    -0x1.8e492394a07ep-1, -0x1.466369fb8a587p-1, -0x1.867db0c146bcep-1, -0x1.98abf183284bcp-1,
    -0x1.7c417ebac979ap-1, 0x1.c9d7814e0bba7p-3, 0x1.2a9fe422fa6adp-1, -0x1.f261225337784p-2,
    -0x1.64aaab417e3f8p-1, -0x1.03b6f0aaa7e7bp-1, -0x1.7fcec9ff5b3d9p-1, -0x1.98ca54cdb4c4ap-1,
    -0x1.650da6607c336p-1, 0x1.3f674842bfb0ap-2, 0x1.a1e940c36cb1dp-2, -0x1.4a89bd6216661p-1,
    -0x1.2e01fb645b15ap-1, -0x1.f0b00171532bap-2, -0x1.838cd1fc3b16cp-1, -0x1.992c9157a94c2p-1,
    -0x1.68676ccb4898bp-1, 0x1.6865bdd9914cdp-5, 0x1.7802b4fbb10e7p-5, -0x1.84cf5efb8f644p-1,
    -0x1.1eb0e1a149598p-1, -0x1.3175bba709cf4p-1, -0x1.8da55e04eb6a4p-1, -0x1.997bd253b1664p-1,
    -0x1.7f8d2390788aap-1, -0x1.cb5aee93963p-2, -0x1.e1921ce2d1f2dp-2, -0x1.992975ced93d7p-1,
    -0x1.53107875a9a29p-1, -0x1.6ff6e16cf1a8ap-1, -0x1.954e21947aae4p-1, -0x1.99974711e4507p-1};

// Regime of the independence check: unit features in kIndependenceDim
// dimensions at temperature kIndependenceTau. Logits then have spread
// 1/(tau sqrt(dim)) = 1/64, where the Jensen bias of the offset estimate
// (about -0.47 spread^2) stays under one standard error at 1e4 queries.
inline constexpr double kIndependenceTau = 2.0;
inline constexpr std::size_t kIndependenceDim = 1024;

}  // namespace ranknce::verify
