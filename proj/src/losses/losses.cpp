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

#include "ranknce/losses.hpp"

#include <cmath>
#include <string>

#include "ranknce/error.hpp"
#include "ranknce/ops.hpp"

namespace ranknce::losses {
namespace {

void require_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ConfigError("temperature must be positive and finite");
  }
}

Var reduce(Tape& tape, std::span<const Var> terms, NceAggregation aggregation) {
  if (terms.empty()) return tape.constant(Tensor::scalar(0.0));
  Var stacked = ops::concat(terms);
  return aggregation == NceAggregation::kSum ? ops::sum(stacked) : ops::mean(stacked);
}

LossTerm scaled_zero(Tape& tape) {
  LossTerm t;
  t.value = tape.constant(Tensor::scalar(0.0));
  return t;
}

}  // namespace

void ObjectiveWeights::validate() const {
  require_tau(tau);
  if (k < 1) throw ConfigError("K must be at least 1");
  if (lambda_gan < 0.0 || lambda_x < 0.0 || lambda_y < 0.0) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (std::isnan(theta)) throw ConfigError("theta is NaN");
}

LossTerm patch_nce(Var positive, Var negatives, double tau) {
  require_tau(tau);
  if (positive.numel() != 1) throw ShapeError("patch_nce: positive must be a scalar");
  if (negatives.numel() == 0) throw ShapeError("patch_nce: no negatives");
  const Var parts[] = {positive, negatives};
  Var logits = ops::scale(ops::concat(parts), 1.0 / tau);
  LossTerm term;
  term.value = ops::softmax_ce(logits, 0);
  term.per_layer = {term.item()};
  term.per_query = {term.item()};
  return term;
}

LossTerm rank_nce(const selection::SimilarityMatrix& sim,
                  const selection::NegativeSet& negatives, std::size_t query,
                  double tau) {
  const std::size_t n = sim.size();
  if (query >= n || query >= negatives.rows.size()) {
    throw ShapeError("rank_nce: query index out of range");
  }
  const auto& row = negatives.rows[query];
  if (row.indices.empty()) {
    throw SelectionError("rank_nce: query " + std::to_string(query) +
                         " has an empty negative set");
  }
  std::vector<std::size_t> flat;
  flat.reserve(row.indices.size());
  for (std::size_t j : row.indices) {
    if (j == query) throw SelectionError("rank_nce: positive index in negative set");
    flat.push_back(query * n + j);
  }
  return patch_nce(ops::gather(sim.positives, {query}),
                   ops::gather(sim.scores, std::move(flat)), tau);
}

LossTerm patch_nce_layer(Var fake, Var real, double tau, NceAggregation aggregation) {
  if (fake.shape() != real.shape() || fake.value().rank() != 2) {
    throw ShapeError("patch_nce_layer: feature shapes differ");
  }
  const std::size_t s = fake.value().dim(0);
  if (s < 2) throw ShapeError("patch_nce_layer: need at least two locations");
  Var raw = ops::matmul(fake, ops::transpose(real));
  std::vector<Var> rows;
  LossTerm out;
  for (std::size_t i = 0; i < s; ++i) {
    std::vector<std::size_t> neg;
    for (std::size_t j = 0; j < s; ++j) {
      if (j != i) neg.push_back(i * s + j);
    }
    LossTerm q = patch_nce(ops::gather(raw, {i * s + i}), ops::gather(raw, std::move(neg)), tau);
    out.per_query.push_back(q.item());
    rows.push_back(q.value);
  }
  out.value = reduce(fake.tape(), rows, aggregation);
  out.per_layer = {out.item()};
  return out;
}

LossTerm multilayer_rank_nce(const features::FeatureStack& real,
                             const features::FeatureStack& fake,
                             const RankNceOptions& options) {
  require_tau(options.tau);
  if (real.layers.size() != fake.layers.size() || real.layers.empty()) {
    throw ShapeError("multilayer_rank_nce: stacks have " +
                     std::to_string(real.layers.size()) + " and " +
                     std::to_string(fake.layers.size()) + " layers");
  }
  Tape& tape = real.layers.front().features.tape();
  LossTerm out;
  std::vector<Var> layer_values;
  for (std::size_t l = 0; l < real.layers.size(); ++l) {
    const auto& rl = real.layers[l];
    const auto& fl = fake.layers[l];
    if (rl.locations != fl.locations) {
      throw ShapeError("multilayer_rank_nce: layer " + std::to_string(rl.layer) +
                       " real and generated stacks use different locations");
    }
    const auto sel = selection::select_negatives(fl.features, rl.features, options.theta,
                                                 options.k, options.empty_rows);
    std::vector<Var> rows;
    for (std::size_t i = 0; i < sel.similarity.size(); ++i) {
      if (sel.negatives.rows[i].indices.empty()) {
        ++out.skipped_queries;
        continue;
      }
      LossTerm q = rank_nce(sel.similarity, sel.negatives, i, options.tau);
      out.per_query.push_back(q.item());
      rows.push_back(q.value);
    }
    Var lv = reduce(tape, rows, options.aggregation);
    out.per_layer.push_back(lv.item());
    layer_values.push_back(lv);
  }
  out.value = layer_values.size() == 1 ? layer_values.front()
                                       : ops::sum(ops::concat(layer_values));
  return out;
}

LossTerm gan_loss_d(Var d_real, Var d_fake, GanVariant variant) {
  if (d_real.numel() == 0 || d_fake.numel() == 0) {
    throw ShapeError("gan_loss_d: empty batch");
  }
  LossTerm t;
  Var real_term, fake_term;
  if (variant == GanVariant::kLeastSquares) {
    Var r = ops::shift(d_real, -1.0);
    real_term = ops::mean(ops::mul(r, r));
    fake_term = ops::mean(ops::mul(d_fake, d_fake));
  } else {
    // -log sigmoid(r) = softplus(-r); -log(1 - sigmoid(f)) = softplus(f)
    real_term = ops::mean(ops::softplus(ops::scale(d_real, -1.0)));
    fake_term = ops::mean(ops::softplus(d_fake));
  }
  t.value = ops::add(real_term, fake_term);
  t.per_layer = {t.item()};
  return t;
}

LossTerm gan_loss_g(Var d_fake, GanVariant variant) {
  if (d_fake.numel() == 0) throw ShapeError("gan_loss_g: empty batch");
  LossTerm t;
  switch (variant) {
    case GanVariant::kNonSaturating:
      t.value = ops::mean(ops::softplus(ops::scale(d_fake, -1.0)));
      break;
    case GanVariant::kMinimax:
      // minimizes E[log(1 - sigmoid(f))] = -E[softplus(f)]
      t.value = ops::scale(ops::mean(ops::softplus(d_fake)), -1.0);
      break;
    case GanVariant::kLeastSquares: {
      Var r = ops::shift(d_fake, -1.0);
      t.value = ops::mean(ops::mul(r, r));
      break;
    }
  }
  t.per_layer = {t.item()};
  return t;
}

namespace {

struct PathResult {
  LossTerm nce;
  std::vector<Var> generated;
};

// Mean over the batch of the multilayer RankNCE between each source image and
// its translation.
PathResult contrastive_path(const TranslationModel& model,
                            std::span<const Var> sources,
                            const ObjectiveConfig& config, Rng& sampling) {
  const auto& w = config.weights;
  const RankNceOptions opts{w.tau, w.k, w.theta, config.aggregation, config.empty_rows};
  const auto heads = model.heads();
  const auto taps = model.tap_layers();
  PathResult result;
  std::vector<Var> per_image;
  std::vector<double> layer_sums;
  for (const Var& src : sources) {
    auto [generated, real_taps] = model.translate_with_taps(src);
    const std::vector<Var> fake_taps = model.encode(generated);
    const auto locations =
        features::sample_stack_locations(real_taps, config.samples_per_layer, sampling);
    const auto real = features::project(real_taps, locations, heads, taps,
                                        config.normalize_features);
    const auto fake = features::project(fake_taps, locations, heads, taps,
                                        config.normalize_features);
    LossTerm term = multilayer_rank_nce(real, fake, opts);
    layer_sums.resize(term.per_layer.size(), 0.0);
    for (std::size_t l = 0; l < term.per_layer.size(); ++l) layer_sums[l] += term.per_layer[l];
    result.nce.per_query.insert(result.nce.per_query.end(), term.per_query.begin(),
                                term.per_query.end());
    result.nce.skipped_queries += term.skipped_queries;
    per_image.push_back(term.value);
    result.generated.push_back(generated);
  }
  result.nce.value = ops::mean(ops::concat(per_image));
  for (double& v : layer_sums) v /= static_cast<double>(sources.size());
  result.nce.per_layer = std::move(layer_sums);
  return result;
}

}  // namespace

ObjectiveTerms total_objective(const TranslationModel& model,
                               std::span<const Var> x_batch,
                               std::span<const Var> y_batch,
                               const ObjectiveConfig& config, Rng& sampling) {
  config.weights.validate();
  if (x_batch.empty()) throw ShapeError("total_objective: empty source batch");
  const auto& w = config.weights;
  Tape& tape = x_batch.front().tape();
  ObjectiveTerms terms;

  if (w.lambda_x > 0.0) {
    PathResult px = contrastive_path(model, x_batch, config, sampling);
    terms.nce_x = std::move(px.nce);
    terms.translated = std::move(px.generated);
  } else {
    terms.nce_x = scaled_zero(tape);
    for (const Var& x : x_batch) terms.translated.push_back(model.translate_with_taps(x).first);
  }

  if (w.lambda_y > 0.0) {
    if (y_batch.empty()) throw ShapeError("total_objective: empty target batch");
    terms.nce_y = contrastive_path(model, y_batch, config, sampling).nce;
  } else {
    terms.nce_y = scaled_zero(tape);
  }

  std::vector<Var> parts;
  if (w.lambda_gan > 0.0) {
    std::vector<Var> logits;
    for (const Var& g : terms.translated) logits.push_back(model.discriminate(g));
    LossTerm gan = gan_loss_g(ops::concat(logits), config.gan);
    terms.gan = gan.item();
    parts.push_back(ops::scale(gan.value, w.lambda_gan));
  }
  if (w.lambda_x > 0.0) parts.push_back(ops::scale(terms.nce_x.value, w.lambda_x));
  if (w.lambda_y > 0.0) parts.push_back(ops::scale(terms.nce_y.value, w.lambda_y));

  if (parts.empty()) {
    terms.total = tape.constant(Tensor::scalar(0.0));
  } else if (parts.size() == 1) {
    terms.total = parts.front();
  } else {
    terms.total = ops::sum(ops::concat(parts));
  }
  return terms;
}

}  // namespace ranknce::losses
