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
#include <limits>
#include <span>
#include <vector>

#include "ranknce/tape.hpp"

namespace ranknce::selection {

// Requests every surviving candidate.
inline constexpr std::size_t kAllNegatives = std::numeric_limits<std::size_t>::max();

/// Query-by-key similarity C = fake * real^T for one tap layer.
///
/// Row i is the query patch of the generated image, column j a candidate
/// patch of the real image. The diagonal (positive pairs) is copied into
/// `positives` and then masked to zero in `scores`.
struct SimilarityMatrix {
  Var scores;     // [S,S]
  Var positives;  // [S]
  bool mask_applied = true;
  // Row-major S*S candidate flags; zero on the diagonal and on pruned entries.
  std::vector<std::uint8_t> eligible;

  std::size_t size() const;
  double score(std::size_t i, std::size_t j) const;
  bool is_eligible(std::size_t i, std::size_t j) const;
  bool is_pruned(std::size_t i, std::size_t j) const;
  std::size_t survivors(std::size_t row) const;
};

struct NegativeRow {
  std::vector<std::size_t> indices;  // sorted by score desc, index asc on ties
  std::vector<double> scores;
  std::size_t k_effective() const { return indices.size(); }
};

struct NegativeSet {
  std::size_t k_requested = 0;
  std::vector<NegativeRow> rows;
};

enum class EmptyRowPolicy {
  kError,  // a row without survivors raises SelectionError
  kKeep,   // the row is returned empty; the caller must skip it
};

SimilarityMatrix similarity_matrix(Var fake, Var real);

// Candidate (i,j) survives iff scores[i][j] > theta. theta may be +-inf;
// NaN is rejected. Survivors can only be removed, never restored.
SimilarityMatrix prune(const SimilarityMatrix& sim, double theta);

// Per query row, the min(k, survivors) highest surviving scores.
NegativeSet rank_topk(const SimilarityMatrix& sim, std::size_t k,
                      EmptyRowPolicy policy = EmptyRowPolicy::kError);

struct Selection {
  SimilarityMatrix similarity;
  NegativeSet negatives;
};

Selection select_negatives(Var fake, Var real, double theta, std::size_t k,
                           EmptyRowPolicy policy = EmptyRowPolicy::kError);

// Indices of the k largest eligible entries of one row, largest first; equal
// scores are ordered by ascending index.
std::vector<std::size_t> top_k_indices(std::span<const double> scores,
                                       std::span<const std::uint8_t> eligible,
                                       std::size_t k);

}  // namespace ranknce::selection
