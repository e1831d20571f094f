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

#include "ranknce/tensor.hpp"

namespace ranknce::mi {

// Per-query InfoNCE log-ratios
//   log( e^{s+/tau} / (e^{s+/tau} + sum_n e^{s_n/tau}) )  [+ ln(N+1) with offset].
// negatives[q] holds the N_q negative scores of query q.
std::vector<double> infonce_terms(std::span<const double> positives,
                                  const std::vector<std::vector<double>>& negatives,
                                  double tau, bool with_offset);

// Mean of infonce_terms. Without the offset the value is <= 0; with it the
// value is <= ln(N+1).
double infonce_bound(std::span<const double> positives,
                     const std::vector<std::vector<double>>& negatives, double tau,
                     bool with_offset);

/// Multi-sample bound over a full (N+1)x(N+1) pairing matrix where
/// pairing(k, i) = v_k . v~_i+ (v_0 is the positive, v~_i+ the positive
/// partner of v_i):
///   1/(N+1) sum_i log( e^{p(i,i)/tau} / (1/(N+1) sum_k e^{p(k,i)/tau}) )
double multisample_bound(const Tensor& pairing, double tau);

// Softmax over {s+, s_1..s_N}: entry 0 is p(v|v+), entry n is p(v|v-_n),
// with p(v) taken as a uniform constant so the row sums to one.
std::vector<double> conditional_probs(double positive,
                                      std::span<const double> negatives, double tau);

struct RankingCheck {
  bool consistent = true;   // pairwise order of probabilities == order of scores
  double kendall_tau = 1.0; // tau-b between scores and probabilities
};

RankingCheck contribution_ranking_check(std::span<const double> negative_scores,
                                        std::span<const double> negative_probs);

struct NegativeContribution {
  std::size_t query = 0;
  std::size_t index = 0;
  double similarity = 0.0;
  double probability = 0.0;
  double contribution = 0.0;  // p log p
};

struct MiReport {
  double infonce = 0.0;
  double infonce_offset = 0.0;
  double multisample = 0.0;
  double max_negative_p = 0.0;
  double mean_negative_p = 0.0;
  std::vector<NegativeContribution> per_negative;
};

// Diagnostics for one layer from its unmasked query-by-key similarity
// C(i,j) = fake_i . real_j. Every off-diagonal entry is a negative.
MiReport mi_report(const Tensor& similarity, double tau);

}  // namespace ranknce::mi
