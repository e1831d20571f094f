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

#include <span>

#include "ranknce/tensor.hpp"

namespace ranknce::toy {

// Median pairwise Euclidean distance over the pooled samples; 1.0 when the
// median is zero.
double median_bandwidth(std::span<const Tensor> a, std::span<const Tensor> b);

/// Unbiased RBF-kernel MMD^2 with median-heuristic bandwidth,
/// k(u,v) = exp(-|u-v|^2 / (2 sigma^2)). For equal-size sets the cross term
/// excludes matched pairs (U-statistic form), so identical sets give 0.
double mmd2_unbiased(std::span<const Tensor> generated, std::span<const Tensor> target);
double mmd2_biased(std::span<const Tensor> generated, std::span<const Tensor> target);

// Unbiased estimate clipped at zero.
double mmd_metric(std::span<const Tensor> generated, std::span<const Tensor> target);

/// Pearson correlation between 3x3-Laplacian responses of `source` and
/// `translated` over interior pixels. Throws NumericError on a zero-variance
/// response.
double structure_score(const Tensor& source, const Tensor& translated);

}  // namespace ranknce::toy
