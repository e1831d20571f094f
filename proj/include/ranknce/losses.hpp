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
#include <utility>
#include <vector>

#include "ranknce/negative_selection.hpp"
#include "ranknce/patch_features.hpp"
#include "ranknce/rng.hpp"
#include "ranknce/tape.hpp"

namespace ranknce::losses {

enum class GanVariant { kNonSaturating, kMinimax, kLeastSquares };

// How per-query NCE terms are reduced within a layer before layers are summed.
enum class NceAggregation { kMeanOverLocations, kSum };

struct ObjectiveWeights {
  double lambda_gan = 1.0;
  double lambda_x = 1.0;
  double lambda_y = 1.0;
  double tau = 0.07;
  std::size_t k = 5;
  double theta = 0.0;

  void validate() const;
};

/// A scalar loss on the tape plus its decomposition. `per_layer` sums to
/// `value`; `per_query` holds the un-reduced row losses in layer order.
struct LossTerm {
  Var value;
  std::vector<double> per_layer;
  std::vector<double> per_query;
  std::size_t skipped_queries = 0;

  double item() const { return value.item(); }
};

// -log( e^{s+/tau} / (e^{s+/tau} + sum_n e^{s_n/tau}) ), via log-sum-exp.
LossTerm patch_nce(Var positive, Var negatives, double tau);

// patch_nce restricted to the selected negatives of one query row.
LossTerm rank_nce(const selection::SimilarityMatrix& sim,
                  const selection::NegativeSet& negatives, std::size_t query,
                  double tau);

// Reference form: every other location of the layer is a negative.
LossTerm patch_nce_layer(Var fake, Var real, double tau,
                         NceAggregation aggregation = NceAggregation::kMeanOverLocations);

struct RankNceOptions {
  double tau = 0.07;
  std::size_t k = 5;
  double theta = 0.0;
  NceAggregation aggregation = NceAggregation::kMeanOverLocations;
  // kKeep skips queries whose candidates were all pruned.
  selection::EmptyRowPolicy empty_rows = selection::EmptyRowPolicy::kError;
};

LossTerm multilayer_rank_nce(const features::FeatureStack& real,
                             const features::FeatureStack& fake,
                             const RankNceOptions& options);

// Discriminator outputs are raw logits, one per batch item.
LossTerm gan_loss_d(Var d_real, Var d_fake,
                    GanVariant variant = GanVariant::kNonSaturating);
LossTerm gan_loss_g(Var d_fake, GanVariant variant = GanVariant::kNonSaturating);

/// Networks the total objective needs, bound to one tape.
class TranslationModel {
 public:
  virtual ~TranslationModel() = default;

  // Generated image and the encoder tap activations of the input.
  virtual std::pair<Var, std::vector<Var>> translate_with_taps(Var image) const = 0;
  virtual std::vector<Var> encode(Var image) const = 0;
  // Scalar real/fake logit.
  virtual Var discriminate(Var image) const = 0;
  virtual std::span<const features::ProjectionHead> heads() const = 0;
  virtual std::vector<std::size_t> tap_layers() const = 0;
};

struct ObjectiveConfig {
  ObjectiveWeights weights;
  NceAggregation aggregation = NceAggregation::kMeanOverLocations;
  GanVariant gan = GanVariant::kNonSaturating;
  std::size_t samples_per_layer = 16;
  bool normalize_features = true;
  selection::EmptyRowPolicy empty_rows = selection::EmptyRowPolicy::kKeep;
};

struct ObjectiveTerms {
  Var total;
  double gan = 0.0;
  LossTerm nce_x;  // zero-valued constant when lambda_x == 0
  LossTerm nce_y;  // identity path, zero-valued constant when lambda_y == 0
  std::vector<Var> translated;  // G(x) per batch item
};

// Generator objective
//   lambda_gan * L_gan(G(x)) + lambda_x * L_rank(x, G(x)) + lambda_y * L_rank(y, G(y)).
// Patch locations are drawn from `sampling`, once per image and tap layer,
// and shared by the real and generated feature stacks.
ObjectiveTerms total_objective(const TranslationModel& model,
                               std::span<const Var> x_batch,
                               std::span<const Var> y_batch,
                               const ObjectiveConfig& config, Rng& sampling);

}  // namespace ranknce::losses
