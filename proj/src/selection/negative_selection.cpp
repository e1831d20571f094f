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

#include "ranknce/negative_selection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ranknce/error.hpp"
#include "ranknce/ops.hpp"

namespace ranknce::selection {

std::size_t SimilarityMatrix::size() const { return positives.numel(); }

double SimilarityMatrix::score(std::size_t i, std::size_t j) const {
  return scores.value().at(i, j);
}

bool SimilarityMatrix::is_eligible(std::size_t i, std::size_t j) const {
  return eligible[i * size() + j] != 0;
}

bool SimilarityMatrix::is_pruned(std::size_t i, std::size_t j) const {
  return i != j && !is_eligible(i, j);
}

std::size_t SimilarityMatrix::survivors(std::size_t row) const {
  const std::size_t n = size();
  return static_cast<std::size_t>(
      std::count(eligible.begin() + row * n, eligible.begin() + (row + 1) * n, 1));
}

SimilarityMatrix similarity_matrix(Var fake, Var real) {
  if (fake.shape() != real.shape() || fake.value().rank() != 2) {
    throw ShapeError("similarity_matrix: feature matrices " +
                     shape_string(fake.shape()) + " and " +
                     shape_string(real.shape()) + " must be equal-shaped [S,C]");
  }
  const std::size_t s = fake.value().dim(0);
  Var raw = ops::matmul(fake, ops::transpose(real));
  std::vector<std::size_t> diag(s);
  for (std::size_t i = 0; i < s; ++i) diag[i] = i * s + i;

  SimilarityMatrix sim;
  sim.positives = ops::gather(raw, std::move(diag));
  sim.scores = ops::mask_diagonal(raw);
  sim.mask_applied = true;
  sim.eligible.assign(s * s, 1);
  for (std::size_t i = 0; i < s; ++i) sim.eligible[i * s + i] = 0;
  return sim;
}

SimilarityMatrix prune(const SimilarityMatrix& sim, double theta) {
  if (std::isnan(theta)) throw SelectionError("prune: theta is NaN");
  if (!sim.mask_applied) throw SelectionError("prune: similarity matrix is unmasked");
  SimilarityMatrix out = sim;
  if (theta == -std::numeric_limits<double>::infinity()) return out;
  const std::size_t n = sim.size();
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = sim.score(i, j);
      if (!(v > theta)) out.eligible[i * n + j] = 0;
      if (std::isfinite(theta)) margin = std::min(margin, std::abs(v - theta));
    }
  }
  Tape& tape = sim.scores.tape();
  for (std::size_t i = 0; i < n * n; i += 64) {
    std::uint64_t bits = 0;
    for (std::size_t j = i; j < std::min(n * n, i + 64); ++j) bits = bits << 1 | out.eligible[j];
    tape.note_branch(bits);
  }
  tape.note_kink(margin);
  return out;
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores,
                                       std::span<const std::uint8_t> eligible,
                                       std::size_t k) {
  std::vector<std::size_t> cand;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (eligible[j]) cand.push_back(j);
  }
  const auto before = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  if (k < cand.size()) {
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                      cand.end(), before);
    cand.resize(k);
  } else {
    std::sort(cand.begin(), cand.end(), before);
  }
  return cand;
}

NegativeSet rank_topk(const SimilarityMatrix& sim, std::size_t k,
                      EmptyRowPolicy policy) {
  if (k < 1) throw SelectionError("rank_topk: K must be at least 1");
  const std::size_t n = sim.size();
  const auto values = sim.scores.value().data();
  NegativeSet result;
  result.k_requested = k;
  result.rows.resize(n);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = values.subspan(i * n, n);
    const auto flags = std::span<const std::uint8_t>(sim.eligible).subspan(i * n, n);
    const std::size_t survivors = sim.survivors(i);
    if (survivors == 0 && policy == EmptyRowPolicy::kError) {
      throw SelectionError("rank_topk: query row " + std::to_string(i) +
                           " has no surviving negatives; lower theta");
    }
    NegativeRow& out = result.rows[i];
    out.indices = top_k_indices(row, flags, k);
    out.scores.reserve(out.indices.size());
    for (std::size_t j : out.indices) out.scores.push_back(row[j]);
    sim.scores.tape().note_branch(out.indices.size());
    for (std::size_t j : out.indices) sim.scores.tape().note_branch(j);
    if (out.indices.size() < survivors) {
      // Distance from the last selected score to the best rejected one.
      double best_rejected = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (flags[j] && std::find(out.indices.begin(), out.indices.end(), j) ==
                            out.indices.end()) {
          best_rejected = std::max(best_rejected, row[j]);
        }
      }
      margin = std::min(margin, out.scores.back() - best_rejected);
    }
  }
  sim.scores.tape().note_kink(margin);
  return result;
}

Selection select_negatives(Var fake, Var real, double theta, std::size_t k,
                           EmptyRowPolicy policy) {
  Selection sel;
  sel.similarity = prune(similarity_matrix(fake, real), theta);
  sel.negatives = rank_topk(sel.similarity, k, policy);
  return sel;
}

}  // namespace ranknce::selection
