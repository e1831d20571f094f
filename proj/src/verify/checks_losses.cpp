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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "common.hpp"
#include "ranknce/error.hpp"
#include "ranknce/losses.hpp"
#include "ranknce/negative_selection.hpp"
#include "ranknce/ops.hpp"
#include "ranknce/patch_features.hpp"
#include "ranknce/toy/model.hpp"
#include "ranknce/verify/oracles.hpp"

namespace ranknce::verify {

using detail::max_abs_diff;
using detail::rand_unit_rows;
using detail::randn;
using detail::result;
using detail::str;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Random row with engineered duplicates: values are drawn from a small grid
// part of the time so ties are frequent.
std::vector<double> tied_row(std::size_t n, Rng& rng) {
  std::vector<double> row(n);
  const bool coarse = rng.uniform() < 0.5;
  for (double& v : row) {
    v = coarse ? static_cast<double>(rng.index(5)) * 0.25 - 0.5 : rng.normal();
  }
  if (n > 3 && rng.uniform() < 0.5) row[rng.index(n)] = row[rng.index(n)];
  return row;
}

}  // namespace

CheckResult check_similarity_examples(std::uint64_t seed) {
  Tape t;
  const auto hand = selection::similarity_matrix(
      t.constant(Tensor::matrix(2, 2, {1, 0, 0, 1})),
      t.constant(Tensor::matrix(2, 2, {1, 1, 1, -1})));
  bool ok = hand.positives.value() == Tensor::vector({1, -1}) &&
            hand.scores.value() == Tensor::matrix(2, 2, {0, 1, 1, 0});
  Rng rng(seed);
  const Tensor fake = randn(Shape{8, 4}, rng), real = randn(Shape{8, 4}, rng);
  const auto sim = selection::similarity_matrix(t.constant(fake), t.constant(real));
  const Tensor oracle = naive_similarity(fake, real);
  double diff = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    diff = std::max(diff, std::abs(sim.positives.value()[i] - oracle.at(i, i)));
    ok &= sim.scores.value().at(i, i) == 0.0;
    for (std::size_t j = 0; j < 8; ++j)
      if (i != j) diff = std::max(diff, std::abs(sim.scores.value().at(i, j) - oracle.at(i, j)));
  }
  const Tensor eye = Tensor::identity(4);
  const auto ortho = selection::similarity_matrix(t.constant(eye), t.constant(eye));
  for (std::size_t i = 0; i < 4; ++i) {
    ok &= ortho.positives.value()[i] == 1.0;
    for (std::size_t j = 0; j < 4; ++j) ok &= ortho.scores.value().at(i, j) == 0.0;
  }
  ok &= diff <= 1e-12;
  return result("negative_selection", "similarity matrix examples", ok, diff,
                str("hand 2x2, orthonormal, seeded 8x4 max diff ", diff));
}

CheckResult check_prune_examples() {
  Tape t;
  // Query 0 sees candidates with scores 0.9, 0.1, -0.2.
  const Tensor fake = Tensor::matrix(4, 4, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  const Tensor real = Tensor::matrix(4, 4, {1, 0, 0, 0, 0.9, 1, 0, 0, 0.1, 0, 1, 0, -0.2, 0, 0, 1});
  const auto sim = selection::similarity_matrix(t.constant(fake), t.constant(real));
  const auto p0 = selection::prune(sim, 0.0);
  bool ok = p0.is_eligible(0, 1) && p0.is_eligible(0, 2) && !p0.is_eligible(0, 3) &&
            p0.survivors(0) == 2 && p0.positives.value() == sim.positives.value();
  const auto none = selection::prune(sim, kInf);
  const auto all = selection::prune(sim, -kInf);
  for (std::size_t i = 0; i < 4; ++i) {
    ok &= none.survivors(i) == 0 && all.survivors(i) == 3;
  }
  bool nan_rejected = false;
  try {
    selection::prune(sim, std::nan(""));
  } catch (const SelectionError&) {
    nan_rejected = true;
  }
  bool empty_named = false;
  try {
    selection::rank_topk(none, 1);
  } catch (const SelectionError& e) {
    empty_named = std::string(e.what()).find("row 0") != std::string::npos;
  }
  bool k0_rejected = false;
  try {
    selection::rank_topk(all, 0);
  } catch (const Error&) {
    k0_rejected = true;
  }
  // row [0.5, 0.5, 0.3], K=1 -> first 0.5
  const std::vector<double> row{0.5, 0.5, 0.3};
  const std::vector<std::uint8_t> elig{1, 1, 1};
  ok &= selection::top_k_indices(row, elig, 1) == std::vector<std::size_t>{0};
  ok = ok && nan_rejected && empty_named && k0_rejected;
  return result("negative_selection", "prune and rank examples", ok, ok ? 1.0 : 0.0,
                str("theta 0 / +inf / -inf cases, NaN rejected ", nan_rejected,
                    ", empty row named ", empty_named, ", K=0 rejected ", k0_rejected));
}

CheckResult check_monotone_pruning(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t violations = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Tape t;
    const auto sim = selection::similarity_matrix(t.constant(randn(Shape{6, 3}, rng)),
                                                  t.constant(randn(Shape{6, 3}, rng)));
    double th1 = rng.normal(), th2 = rng.normal();
    if (th1 > th2) std::swap(th1, th2);
    const auto p1 = selection::prune(sim, th1);
    const auto p2 = selection::prune(sim, th2);
    // Pruning an already pruned matrix can only remove candidates.
    const auto p12 = selection::prune(p1, th2);
    for (std::size_t k = 0; k < p1.eligible.size(); ++k) {
      if (p2.eligible[k] && !p1.eligible[k]) ++violations;
      if (p12.eligible[k] != p2.eligible[k]) ++violations;
    }
  }
  return result("negative_selection", "monotone pruning", violations == 0,
                static_cast<double>(violations),
                str(trials, " threshold pairs, ", violations, " survivor additions"));
}

CheckResult check_topk_oracle(std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t agree = 0;
  const std::size_t ks[] = {1, 3, 5};
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t n = 2 + rng.index(30);
    const auto row = tied_row(n, rng);
    std::vector<std::uint8_t> elig(n);
    for (auto& e : elig) e = rng.uniform() < 0.8 ? 1 : 0;
    const std::size_t k = ks[r % 3];
    if (selection::top_k_indices(row, elig, k) == sort_truncate_topk(row, elig, k)) ++agree;
  }
  const double rate = static_cast<double>(agree) / static_cast<double>(rows);
  return result("negative_selection", "top-K equals sort-then-truncate", agree == rows, rate,
                str(agree, "/", rows, " rows agree (K in {1,3,5}, ties engineered)"));
}

CheckResult check_anti_leak(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t leaks = 0, rows = 0, bad_order = 0, bad_k = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t s = 2 + rng.index(12);
    Tape t;
    // Identical fake and real make the positive the most similar candidate.
    const Tensor f = rand_unit_rows(s, 3, rng);
    const Tensor r = rng.uniform() < 0.5 ? f : rand_unit_rows(s, 3, rng);
    const std::size_t k = 1 + rng.index(s + 2);
    const double theta = rng.uniform() < 0.5 ? -kInf : rng.normal(-0.5, 0.3);
    const auto sel = selection::select_negatives(t.constant(f), t.constant(r), theta, k,
                                                 selection::EmptyRowPolicy::kKeep);
    for (std::size_t i = 0; i < s; ++i) {
      const auto& row = sel.negatives.rows[i];
      ++rows;
      if (std::find(row.indices.begin(), row.indices.end(), i) != row.indices.end()) ++leaks;
      for (std::size_t q = 1; q < row.indices.size(); ++q) {
        const bool ordered = row.scores[q - 1] > row.scores[q] ||
                             (row.scores[q - 1] == row.scores[q] &&
                              row.indices[q - 1] < row.indices[q]);
        if (!ordered) ++bad_order;
      }
      if (row.k_effective() != std::min(k, sel.similarity.survivors(i))) ++bad_k;
    }
  }
  const bool ok = leaks == 0 && bad_order == 0 && bad_k == 0;
  return result("negative_selection", "anti-leak", ok, static_cast<double>(leaks),
                str(rows, " rows, ", leaks, " positives leaked, ", bad_order,
                    " ordering violations, ", bad_k, " k_effective mismatches"));
}

CheckResult check_selection_scale_invariance(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t changed = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t s = 3 + rng.index(10);
    const double c = std::exp(rng.normal(0.0, 1.5));
    Tape t;
    const Tensor f = randn(Shape{s, 4}, rng), r = randn(Shape{s, 4}, rng);
    Tensor fc = f;
    for (double& v : fc.data()) v *= c;
    const std::size_t k = 1 + rng.index(s);
    const auto a = selection::select_negatives(t.constant(f), t.constant(r), 0.0, k,
                                               selection::EmptyRowPolicy::kKeep);
    const auto b = selection::select_negatives(t.constant(fc), t.constant(r), 0.0, k,
                                               selection::EmptyRowPolicy::kKeep);
    for (std::size_t i = 0; i < s; ++i)
      if (a.negatives.rows[i].indices != b.negatives.rows[i].indices) ++changed;
  }
  return result("negative_selection", "selection invariant to positive rescaling",
                changed == 0, static_cast<double>(changed),
                str(trials, " trials, ", changed, " rows changed"));
}

CheckResult check_selection_fixture(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t s = 16;
  const Tensor f = rand_unit_rows(s, 8, rng), r = rand_unit_rows(s, 8, rng);
  Tape t;
  const auto sel = selection::select_negatives(t.constant(f), t.constant(r), 0.0, 3,
                                               selection::EmptyRowPolicy::kKeep);
  const Tensor c = naive_similarity(f, r);
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < s; ++i) {
    std::vector<double> row(s);
    std::vector<std::uint8_t> elig(s);
    for (std::size_t j = 0; j < s; ++j) {
      row[j] = c.at(i, j);
      elig[j] = j != i && c.at(i, j) > 0.0;
    }
    if (sort_truncate_topk(row, elig, 3) != sel.negatives.rows[i].indices) ++mismatched;
  }
  return result("negative_selection", "select_negatives equals composed oracle", mismatched == 0,
                static_cast<double>(mismatched), str(mismatched, "/", s, " rows differ (K=3)"));
}

CheckResult check_reduction_identity(std::size_t pairs, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t s = 2 + rng.index(31);
    const std::size_t c = 1 + rng.index(16);
    const bool normalize = p % 2 == 0;
    Tensor f = normalize ? rand_unit_rows(s, c, rng) : randn(Shape{s, c}, rng, 0.3);
    Tensor r = normalize ? rand_unit_rows(s, c, rng) : randn(Shape{s, c}, rng, 0.3);
    Tape t;
    std::vector<std::size_t> locs(s);
    std::iota(locs.begin(), locs.end(), std::size_t{0});
    features::FeatureStack fs, rs;
    fs.layers.push_back({1, locs, t.constant(f)});
    rs.layers.push_back({1, locs, t.constant(r)});
    losses::RankNceOptions opts;
    opts.theta = -kInf;
    opts.k = s - 1;
    const double rank = losses::multilayer_rank_nce(rs, fs, opts).item();
    const double patch = losses::patch_nce_layer(t.constant(f), t.constant(r), opts.tau).item();
    worst = std::max(worst, std::abs(rank - patch));
  }
  return result("contrastive_losses", "RankNCE(K=S-1, theta=-inf) equals PatchNCE",
                worst <= 1e-12, worst, str(pairs, " feature pairs, max abs diff ", worst));
}

CheckResult check_closed_forms() {
  double worst = 0.0;
  std::string detail;
  Tape t;
  for (std::size_t k = 1; k <= 25; ++k) {
    // Orthonormal-free uniform case: all logits equal.
    const double v = losses::patch_nce(t.constant(Tensor::vector({0.0})),
                                       t.constant(Tensor(Shape{k}, 0.0)), 1.0).item();
    worst = std::max(worst, std::abs(v - std::log(static_cast<double>(k + 1))));
  }
  // RankNCE with K=3 selected scores all 0, s+ = 0, tau = 1.
  {
    const Tensor eye = Tensor::identity(6);
    const Tensor fake(Shape{6, 6});  // zero rows: every score and positive is 0
    const auto sel = selection::select_negatives(t.constant(fake), t.constant(eye), -kInf, 3);
    for (std::size_t q = 0; q < 6; ++q) {
      const double v = losses::rank_nce(sel.similarity, sel.negatives, q, 1.0).item();
      worst = std::max(worst, std::abs(v - std::log(4.0)));
    }
  }
  const double ce = ops::softmax_ce(t.constant(Tensor(Shape{4}, 0.0)), 0).item();
  worst = std::max(worst, std::abs(ce - std::log(4.0)));
  const Var z = t.constant(Tensor(Shape{4}, 0.0));
  const double d = losses::gan_loss_d(z, z).item();
  const double g = losses::gan_loss_g(z).item();
  worst = std::max({worst, std::abs(d - 2.0 * std::log(2.0)), std::abs(g - std::log(2.0))});
  // Limits, checked loosely: they are not exact identities.
  const double lim_nce = losses::patch_nce(t.constant(Tensor::vector({50.0})),
                                           t.constant(Tensor(Shape{15}, 0.0)), 1.0).item();
  const double lim_d = losses::gan_loss_d(t.constant(Tensor(Shape{4}, 50.0)),
                                          t.constant(Tensor(Shape{4}, -50.0))).item();
  const bool limits = lim_nce >= 0.0 && lim_nce < 1e-19 && lim_d < 1e-20;
  return result("contrastive_losses", "closed-form values", worst <= 1e-12 && limits, worst,
                str("ln(k+1) for k=1..25, rank_nce K=3 ln 4, softmax_ce ln 4, gan 2 ln 2 / ln 2;"
                    " max abs diff ", worst, "; limits ", lim_nce, ", ", lim_d));
}

CheckResult check_nce_extended_precision(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double pos = rng.uniform(-1.0, 1.0);
    std::vector<double> neg(255);
    for (double& v : neg) v = rng.uniform(-1.0, 1.0);
    Tape t;
    const double got = losses::patch_nce(t.constant(Tensor::vector({pos})),
                                         t.constant(Tensor(Shape{255}, neg)), 0.07).item();
    const long double ref = nce_extended(pos, neg, 0.07);
    worst = std::max(worst, static_cast<double>(std::abs((got - ref) / ref)));
  }
  return result("contrastive_losses", "patch_nce equals extended-precision sum", worst <= 1e-10,
                worst, str("255 negatives, tau 0.07, max rel diff ", worst));
}

CheckResult check_rank_nce_subset(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t s = 16;
  const Tensor f = rand_unit_rows(s, 8, rng), r = rand_unit_rows(s, 8, rng);
  Tape t;
  const auto sel = selection::select_negatives(t.constant(f), t.constant(r), -kInf, 5);
  const Tensor c = naive_similarity(f, r);
  double worst = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    std::vector<double> row(s);
    std::vector<std::uint8_t> elig(s, 1);
    elig[i] = 0;
    for (std::size_t j = 0; j < s; ++j) row[j] = c.at(i, j);
    std::vector<double> top;
    for (std::size_t j : sort_truncate_topk(row, elig, 5)) top.push_back(row[j]);
    const double want = static_cast<double>(nce_extended(c.at(i, i), top, 0.07));
    const double got = losses::rank_nce(sel.similarity, sel.negatives, i, 0.07).item();
    worst = std::max(worst, std::abs(got - want));
  }
  return result("contrastive_losses", "rank_nce equals NCE on oracle top-5", worst <= 1e-12,
                worst, str("16 queries, max abs diff ", worst));
}

CheckResult check_multilayer_composition(std::uint64_t seed) {
  Rng rng(seed);
  Tape t;
  const std::size_t s[] = {8, 6};
  features::FeatureStack fs, rs;
  std::vector<Tensor> f, r;
  for (std::size_t l = 0; l < 2; ++l) {
    f.push_back(rand_unit_rows(s[l], 5, rng));
    r.push_back(rand_unit_rows(s[l], 5, rng));
    std::vector<std::size_t> locs(s[l]);
    std::iota(locs.begin(), locs.end(), std::size_t{0});
    fs.layers.push_back({l + 1, locs, t.constant(f[l])});
    rs.layers.push_back({l + 1, locs, t.constant(r[l])});
  }
  losses::RankNceOptions opts;
  opts.k = 3;
  opts.theta = -0.3;
  opts.empty_rows = selection::EmptyRowPolicy::kKeep;
  const auto two = losses::multilayer_rank_nce(rs, fs, opts);
  // Hand-composed per-layer oracle.
  double want = 0.0, want_sum = 0.0;
  std::vector<double> layer_vals;
  for (std::size_t l = 0; l < 2; ++l) {
    const Tensor c = naive_similarity(f[l], r[l]);
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < s[l]; ++i) {
      std::vector<double> row(s[l]);
      std::vector<std::uint8_t> elig(s[l]);
      for (std::size_t j = 0; j < s[l]; ++j) {
        row[j] = c.at(i, j);
        elig[j] = j != i && row[j] > opts.theta;
      }
      std::vector<double> top;
      for (std::size_t j : sort_truncate_topk(row, elig, opts.k)) top.push_back(row[j]);
      if (top.empty()) continue;
      acc += static_cast<double>(nce_extended(c.at(i, i), top, opts.tau));
      ++used;
    }
    layer_vals.push_back(acc / static_cast<double>(used));
    want += acc / static_cast<double>(used);
    want_sum += acc;
  }
  double worst = std::abs(two.item() - want);
  opts.aggregation = losses::NceAggregation::kSum;
  worst = std::max(worst, std::abs(losses::multilayer_rank_nce(rs, fs, opts).item() - want_sum));
  opts.aggregation = losses::NceAggregation::kMeanOverLocations;
  // L=1 equals the layer's own mean; duplicating the layer doubles it.
  features::FeatureStack f1, r1, f2, r2;
  f1.layers = {fs.layers[0]};
  r1.layers = {rs.layers[0]};
  f2.layers = {fs.layers[0], fs.layers[0]};
  r2.layers = {rs.layers[0], rs.layers[0]};
  const double one = losses::multilayer_rank_nce(r1, f1, opts).item();
  const double dup = losses::multilayer_rank_nce(r2, f2, opts).item();
  worst = std::max(worst, std::abs(one - layer_vals[0]));
  const bool doubled = dup == 2.0 * one;
  return result("contrastive_losses", "multilayer aggregation", worst <= 1e-12 && doubled, worst,
                str("two-layer oracle sum, literal sum, L=1 mean; max abs diff ", worst,
                    ", duplicate layer exactly doubles: ", doubled));
}

CheckResult check_gan_oracle(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> real(4), fake(4);
    for (double& v : real) v = rng.normal(0.0, 5.0);
    for (double& v : fake) v = rng.normal(0.0, 5.0);
    Tape t;
    const Var rv = t.constant(Tensor(Shape{4}, real)), fv = t.constant(Tensor(Shape{4}, fake));
    worst = std::max(worst, std::abs(losses::gan_loss_d(rv, fv).item() - gan_d_oracle(real, fake)));
    worst = std::max(worst, std::abs(losses::gan_loss_g(fv).item() - gan_g_oracle(fake)));
  }
  return result("contrastive_losses", "gan losses equal stable-sigmoid oracle", worst <= 1e-12,
                worst, str("50 seeded batches, max abs diff ", worst));
}

CheckResult check_loss_monotonicity(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t violations = 0;
  auto loss = [](double pos, const std::vector<double>& neg) {
    Tape t;
    return losses::patch_nce(t.constant(Tensor::vector({pos})),
                             t.constant(Tensor(Shape{neg.size()}, neg)), 0.07)
        .item();
  };
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const double pos = rng.uniform(-1.0, 1.0);
    std::vector<double> neg(1 + rng.index(8));
    for (double& v : neg) v = rng.uniform(-1.0, 1.0);
    const double base = loss(pos, neg);
    if (!(base > 0.0) || !std::isfinite(base)) ++violations;
    if (!(loss(pos + 0.01, neg) < base)) ++violations;
    auto bumped = neg;
    bumped[rng.index(neg.size())] += 0.01;
    if (!(loss(pos, bumped) > base)) ++violations;
  }
  return result("contrastive_losses", "positivity and monotonicity", violations == 0,
                static_cast<double>(violations), str(trials, " trials, ", violations, " violations"));
}

CheckResult check_tau_scale(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t inexact = 0;
  const double cs[] = {0.25, 0.5, 2.0, 4.0, 8.0};
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const double c = cs[trial % 5];
    const double tau = 0.07;
    const double pos = rng.uniform(-1.0, 1.0);
    std::vector<double> neg(1 + rng.index(15));
    for (double& v : neg) v = rng.uniform(-1.0, 1.0);
    std::vector<double> scaled = neg;
    for (double& v : scaled) v *= c;
    Tape t;
    const double a = losses::patch_nce(t.constant(Tensor::vector({pos})),
                                       t.constant(Tensor(Shape{neg.size()}, neg)), tau).item();
    const double b = losses::patch_nce(t.constant(Tensor::vector({pos * c})),
                                       t.constant(Tensor(Shape{neg.size()}, scaled)), tau * c)
                         .item();
    if (a != b) ++inexact;
  }
  return result("contrastive_losses", "tau scale property", inexact == 0,
                static_cast<double>(inexact),
                str(trials, " trials with power-of-two c, ", inexact, " not bit-exact"));
}

CheckResult check_breakdown_sums(std::uint64_t seed) {
  Rng rng(seed);
  toy::Architecture arch;
  arch.encoder.height = arch.encoder.width = 8;
  const auto params = toy::init_parameters(arch, seed);
  Tape t;
  toy::BoundModel model(t, params, arch, toy::Trainable::kNone);
  std::vector<Var> xs, ys;
  for (int i = 0; i < 3; ++i) {
    xs.push_back(t.constant(randn(Shape{1, 8, 8}, rng)));
    ys.push_back(t.constant(randn(Shape{1, 8, 8}, rng)));
  }
  losses::ObjectiveConfig cfg;
  cfg.samples_per_layer = 10;
  Rng sampling(seed);
  const auto terms = losses::total_objective(model, xs, ys, cfg, sampling);
  double worst = 0.0;
  for (const auto* term : {&terms.nce_x, &terms.nce_y}) {
    const double s = std::accumulate(term->per_layer.begin(), term->per_layer.end(), 0.0);
    worst = std::max(worst, std::abs(s - term->item()));
  }
  const double total = terms.gan + terms.nce_x.item() + terms.nce_y.item();
  worst = std::max(worst, std::abs(total - terms.total.item()));
  return result("contrastive_losses", "breakdown sums to value", worst <= 1e-9, worst,
                str("per-layer sums and total, max abs diff ", worst));
}

namespace {

// Literal forward pass of the toy networks from the oracle convolution.
struct ToyReplay {
  const toy::ParameterSet& p;
  const toy::Architecture& a;

  Tensor conv(const Tensor& x, const std::string& name) const {
    return naive_conv2d(x, p.get(name + ".kernel"), p.get(name + ".bias"));
  }
  std::pair<Tensor, std::vector<Tensor>> translate(const Tensor& x) const {
    auto taps = encode(x);
    Tensor h = x;
    for (std::size_t s = 0; s < a.encoder.depth(); ++s) {
      h = naive_relu(conv(h, "gen.enc" + std::to_string(s + 1)));
    }
    for (std::size_t s = 0; s < a.decoder_channels.size(); ++s) {
      h = naive_relu(conv(h, "gen.dec" + std::to_string(s + 1)));
    }
    h = conv(h, "gen.out");
    for (double& v : h.data()) v = std::tanh(v);
    return {h, taps};
  }
  std::vector<Tensor> encode(const Tensor& x) const {
    std::vector<Tensor> taps;
    Tensor h = x;
    for (std::size_t s = 0; s < a.encoder.depth(); ++s) {
      h = naive_relu(conv(h, "gen.enc" + std::to_string(s + 1)));
      if (std::find(a.encoder.tap_layers.begin(), a.encoder.tap_layers.end(), s + 1) !=
          a.encoder.tap_layers.end()) {
        taps.push_back(h);
      }
    }
    return taps;
  }
  double discriminate(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t s = 0; s < a.disc_channels.size(); ++s) {
      h = naive_relu(conv(h, "disc.c" + std::to_string(s + 1)));
    }
    h = conv(h, "disc.out");
    double m = 0.0;
    for (double v : h.data()) m += v;
    return m / static_cast<double>(h.numel());
  }
  double nce(const Tensor& src, const losses::ObjectiveConfig& cfg, Rng& rng) const {
    auto [fake_img, real_taps] = translate(src);
    const auto fake_taps = encode(fake_img);
    double total = 0.0;
    std::vector<std::vector<std::size_t>> locs;
    for (const auto& tap : real_taps) {
      locs.push_back(features::sample_locations(tap.dim(1) * tap.dim(2), cfg.samples_per_layer, rng));
    }
    for (std::size_t l = 0; l < real_taps.size(); ++l) {
      const std::string h = "head.l" + std::to_string(a.encoder.tap_layers[l]);
      auto head = [&](const Tensor& act) {
        return head_oracle(act, locs[l], p.get(h + ".w1"), p.get(h + ".b1"), p.get(h + ".w2"),
                           p.get(h + ".b2"), cfg.normalize_features);
      };
      const Tensor c = naive_similarity(head(fake_taps[l]), head(real_taps[l]));
      const std::size_t s = c.dim(0);
      double acc = 0.0;
      std::size_t used = 0;
      for (std::size_t i = 0; i < s; ++i) {
        std::vector<double> row(s);
        std::vector<std::uint8_t> elig(s);
        for (std::size_t j = 0; j < s; ++j) {
          row[j] = c.at(i, j);
          elig[j] = j != i && row[j] > cfg.weights.theta;
        }
        std::vector<double> top;
        for (std::size_t j : sort_truncate_topk(row, elig, cfg.weights.k)) top.push_back(row[j]);
        if (top.empty()) continue;
        acc += static_cast<double>(nce_extended(c.at(i, i), top, cfg.weights.tau));
        ++used;
      }
      if (used > 0) total += acc / static_cast<double>(used);
    }
    return total;
  }
};

}  // namespace

CheckResult check_total_objective_recomputation(std::uint64_t seed) {
  Rng rng(seed);
  toy::Architecture arch;
  arch.encoder.height = arch.encoder.width = 8;
  const auto params = toy::init_parameters(arch, seed);
  std::vector<Tensor> xs, ys;
  for (int i = 0; i < 2; ++i) {
    xs.push_back(randn(Shape{1, 8, 8}, rng));
    ys.push_back(randn(Shape{1, 8, 8}, rng));
  }
  losses::ObjectiveConfig cfg;
  cfg.samples_per_layer = 12;
  cfg.weights.lambda_gan = 0.5;
  cfg.weights.lambda_y = 2.0;
  cfg.weights.k = 4;
  const std::uint64_t sample_seed = rng.next_u64();

  auto library = [&](const losses::ObjectiveConfig& c) {
    Tape t;
    toy::BoundModel model(t, params, arch, toy::Trainable::kGenerator);
    std::vector<Var> xv, yv;
    for (const auto& x : xs) xv.push_back(t.constant(x));
    for (const auto& y : ys) yv.push_back(t.constant(y));
    Rng sampling(sample_seed);
    const auto terms = losses::total_objective(model, xv, yv, c, sampling);
    return std::pair{terms.total.item(), terms.gan};
  };

  const ToyReplay replay{params, arch};
  Rng sampling(sample_seed);
  double nx = 0.0, ny = 0.0;
  std::vector<double> logits;
  for (const auto& x : xs) nx += replay.nce(x, cfg, sampling);
  for (const auto& y : ys) ny += replay.nce(y, cfg, sampling);
  for (const auto& x : xs) logits.push_back(replay.discriminate(replay.translate(x).first));
  const double gan = gan_g_oracle(logits);
  const double want = cfg.weights.lambda_gan * gan + cfg.weights.lambda_x * nx / 2.0 +
                      cfg.weights.lambda_y * ny / 2.0;
  const double got = library(cfg).first;
  const double rel = std::abs(got - want) / std::abs(want);

  // lambda_X = lambda_Y = 0 leaves the adversarial term alone.
  auto adv_only = cfg;
  adv_only.weights.lambda_x = adv_only.weights.lambda_y = 0.0;
  const auto [adv_total, adv_gan] = library(adv_only);
  const bool reduces = adv_total == adv_only.weights.lambda_gan * adv_gan &&
                       std::abs(adv_gan - gan) <= 1e-12;
  const bool ok = rel <= 1e-10 && reduces;
  return result("contrastive_losses", "total objective equals straight-line recomputation", ok,
                rel, str("rel diff ", rel, ", adversarial-only reduction ", reduces));
}

}  // namespace ranknce::verify
