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

// Independent reference implementations used only to check the library.
// They favour the most literal formula over speed or stability.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ranknce/tensor.hpp"

namespace ranknce::verify {

// Seven nested loops over (o, c, y, x, kh, kw) with explicit padding tests.
Tensor naive_conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias);

Tensor naive_relu(const Tensor& t);

// out[i][j] = sum_c fake[i][c] * real[j][c], no masking.
Tensor naive_similarity(const Tensor& fake, const Tensor& real);

// All eligible indices sorted by (score desc, index asc), then truncated.
std::vector<std::size_t> sort_truncate_topk(std::span<const double> row,
                                            std::span<const std::uint8_t> eligible,
                                            std::size_t k);

// log(1 + sum_n exp((s_n - s+)/tau)) summed directly in long double.
long double nce_extended(double positive, std::span<const double> negatives, double tau);

// Literal softmax over {s+, s_1..s_N} / tau in long double.
std::vector<long double> softmax_extended(double positive, std::span<const double> negatives,
                                          double tau);

// -log sigmoid(z) written with log1p on the non-overflowing side.
double neg_log_sigmoid(double z);
double gan_d_oracle(std::span<const double> real_logits, std::span<const double> fake_logits);
double gan_g_oracle(std::span<const double> fake_logits);

// Direct transcription of the multi-sample bound in long double.
long double multisample_extended(const Tensor& pairing, double tau);

// O(n^2) pair count; tau-b with ties in either sequence.
double kendall_tau_b(std::span<const double> a, std::span<const double> b);

// Pooled median distance, then the U-statistic over paired samples when the
// sets have equal size, the textbook three-sum form otherwise.
double mmd2_oracle(std::span<const Tensor> x, std::span<const Tensor> y);

double structure_oracle(const Tensor& source, const Tensor& translated);

// relu(a W1 + b1) W2 + b2 on the activation columns at `locations`,
// optionally row-normalized.
Tensor head_oracle(const Tensor& activation, std::span<const std::size_t> locations,
                   const Tensor& w1, const Tensor& b1, const Tensor& w2, const Tensor& b2,
                   bool normalize);

}  // namespace ranknce::verify
