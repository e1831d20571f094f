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
#include <numeric>
#include <sstream>

#include "common.hpp"
#include "ranknce/error.hpp"
#include "ranknce/losses.hpp"
#include "ranknce/mi_estimators.hpp"
#include "ranknce/ops.hpp"
#include "ranknce/toy/dataset.hpp"
#include "ranknce/toy/metrics.hpp"
#include "ranknce/toy/trainer.hpp"
#include "ranknce/verify/fixtures.hpp"
#include "ranknce/verify/oracles.hpp"

namespace ranknce::verify {

using detail::rand_unit_rows;
using detail::randn;
using detail::result;
using detail::str;

CheckResult check_negated_loss_is_bound(std::size_t queries, std::uint64_t seed) {
  Rng rng(seed);
  const double tau = 0.07;
  std::vector<double> pos(queries);
  std::vector<std::vector<double>> neg(queries);
  double loss_sum = 0.0;
  for (std::size_t q = 0; q < queries; ++q) {
    pos[q] = rng.uniform(-1.0, 1.0);
    neg[q].resize(1 + rng.index(15));
    for (double& v : neg[q]) v = rng.uniform(-1.0, 1.0);
    Tape t;
    loss_sum += losses::patch_nce(t.constant(Tensor::vector({pos[q]})),
                                  t.constant(Tensor(Shape{neg[q].size()}, neg[q])), tau)
                    .item();
  }
  const double bound = mi::infonce_bound(pos, neg, tau, false);
  const double diff = std::abs(-loss_sum / static_cast<double>(queries) - bound);
  const bool nonpositive = bound <= 0.0;
  return result("mi_estimators", "negated mean loss equals the InfoNCE estimate",
                diff <= 1e-12 && nonpositive, diff,
                str(queries, " queries, abs diff ", diff, ", bound ", bound, " <= 0"));
}

CheckResult check_ranking_consistency(std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t agree = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t n = 1 + rng.index(20);
    std::vector<double> neg(n);
    const bool ties = r % 4 == 0;
    for (double& v : neg) {
      v = ties ? static_cast<double>(rng.index(4)) * 0.25 - 0.5 : rng.uniform(-1.0, 1.0);
    }
    const auto probs = mi::conditional_probs(rng.uniform(-1.0, 1.0), neg, 0.07);
    const std::vector<double> p(probs.begin() + 1, probs.end());
    const auto check = mi::contribution_ranking_check(neg, p);
    // Tied similarities must give exactly tied probabilities.
    bool tie_exact = true;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (neg[a] == neg[b] && p[a] != p[b]) tie_exact = false;
    const bool tau_one = std::abs(check.kendall_tau - 1.0) < 1e-15 &&
                         std::abs(kendall_tau_b(neg, p) - 1.0) < 1e-15;
    if (check.consistent && tie_exact && tau_one) ++agree;
  }
  const double rate = static_cast<double>(agree) / static_cast<double>(rows);
  return result("mi_estimators", "similarity ranking equals probability ranking", agree == rows,
                rate, str(agree, "/", rows, " rows consistent with Kendall tau 1"));
}

CheckResult check_independent_bound(std::size_t queries, std::uint64_t seed, double tau,
                                    std::size_t dim) {
  Rng rng(seed);
  constexpr std::size_t kNegatives = 15;
  std::vector<double> terms;
  terms.reserve(queries);
  std::vector<double> pos(1);
  std::vector<std::vector<double>> neg(1, std::vector<double>(kNegatives));
  for (std::size_t q = 0; q < queries; ++q) {
    // query, positive partner and negatives are mutually independent
    const Tensor v = rand_unit_rows(2 + kNegatives, dim, rng);
    auto dot = [&](std::size_t a, std::size_t b) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) s += v.at(a, c) * v.at(b, c);
      return s;
    };
    pos[0] = dot(0, 1);
    for (std::size_t n = 0; n < kNegatives; ++n) neg[0][n] = dot(0, 2 + n);
    terms.push_back(mi::infonce_terms(pos, neg, tau, true)[0]);
  }
  const double n = static_cast<double>(queries);
  const double mean = std::accumulate(terms.begin(), terms.end(), 0.0) / n;
  double var = 0.0;
  for (double t : terms) var += (t - mean) * (t - mean);
  const double se = std::sqrt(var / (n - 1.0) / n);
  const bool ok = std::abs(mean) <= 3.0 * se;
  return result("mi_estimators", "offset bound near zero under independence", ok, mean,
                str(queries, " queries, N=15, tau ", tau, ", dim ", dim, ": mean ", mean,
                    ", standard error ", se, ", |mean|/se ", std::abs(mean) / se));
}

CheckResult check_multisample_bound(std::uint64_t seed) {
  Rng rng(seed);
  const double tau = 0.07;
  const Tensor equal(Shape{6, 6}, 0.3);
  const double zero = mi::multisample_bound(equal, tau);
  Tensor dominant(Shape{6, 6}, 0.0);
  for (std::size_t i = 0; i < 6; ++i) dominant.at(i, i) = 10.0;
  const double lim = mi::multisample_bound(dominant, tau);
  const Tensor seeded = randn(Shape{4, 4}, rng, 0.5);
  const double diff =
      std::abs(mi::multisample_bound(seeded, 0.5) - static_cast<double>(multisample_extended(seeded, 0.5)));
  bool capped = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(15);
    capped &= mi::multisample_bound(randn(Shape{n, n}, rng), 0.3) <= std::log(static_cast<double>(n)) + 1e-12;
  }
  bool rejected = false;
  try {
    mi::multisample_bound(Tensor(Shape{2, 3}), tau);
  } catch (const ShapeError&) {
    rejected = true;
  }
  const bool ok = std::abs(zero) <= 1e-15 && std::abs(lim - std::log(6.0)) < 1e-9 &&
                  diff <= 1e-12 && capped && rejected;
  return result("mi_estimators", "multi-sample bound", ok, diff,
                str("all-equal ", zero, ", dominant-diagonal ", lim, " vs ln 6, 4x4 oracle diff ",
                    diff, ", <= ln(N+1) on 200 draws ", capped, ", non-square rejected ", rejected));
}

CheckResult check_conditional_probs(std::uint64_t seed) {
  Rng rng(seed);
  const auto uniform = mi::conditional_probs(0.0, std::vector<double>(3, 0.0), 1.0);
  bool ok = true;
  for (double p : uniform) ok &= std::abs(p - 0.25) < 1e-15;
  const auto dom = mi::conditional_probs(0.0, std::vector<double>{0.0, 5.0, 0.0}, 0.07);
  ok &= dom[2] > 1.0 - 1e-12;
  double worst = 0.0, sum_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double pos = rng.uniform(-1.0, 1.0);
    std::vector<double> neg(1 + rng.index(30));
    for (double& v : neg) v = rng.uniform(-1.0, 1.0);
    const auto p = mi::conditional_probs(pos, neg, 0.07);
    const auto ref = softmax_extended(pos, neg, 0.07);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      worst = std::max(worst, static_cast<double>(std::abs(p[i] - ref[i])));
      s += p[i];
    }
    sum_err = std::max(sum_err, std::abs(s - 1.0));
  }
  ok = ok && worst <= 1e-12 && sum_err <= 1e-12;
  return result("mi_estimators", "conditional probabilities", ok, worst,
                str("uniform 1/4, dominant negative -> 1, softmax oracle diff ", worst,
                    ", row-sum error ", sum_err));
}

CheckResult check_bound_dual_route(std::uint64_t seed) {
  // For a full similarity layer the multi-sample bound reduces to the offset
  // InfoNCE estimate with every other location as a negative.
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t s = 2 + rng.index(15);
    const Tensor sim = naive_similarity(rand_unit_rows(s, 6, rng), rand_unit_rows(s, 6, rng));
    const auto rep = mi::mi_report(sim, 0.07);
    worst = std::max(worst, std::abs(rep.multisample - rep.infonce_offset));
    worst = std::max(worst, std::abs(rep.infonce_offset - rep.infonce -
                                     std::log(static_cast<double>(s))));
  }
  return result("mi_estimators", "multi-sample bound equals offset InfoNCE on a full layer",
                worst <= 1e-12, worst, str("50 layers, max abs diff ", worst));
}

CheckResult check_dataset_fixture() {
  toy::DomainSpec spec;
  spec.kind = toy::Texture::kStripes;
  spec.noise_sigma = 0.0;
  spec.height = spec.width = 8;
  const auto imgs = toy::make_dataset(spec, 1, kStripesFixtureSeed);
  const bool same = imgs.size() == 1 && imgs[0].numel() == kStripesFixture.size() &&
                    std::equal(kStripesFixture.begin(), kStripesFixture.end(),
                               imgs[0].data().begin());
  return result("toy_i2i", "noise-free stripes frozen fixture", same, same ? 1.0 : 0.0,
                same ? "8x8 image pixel-exact" : "pixels differ from the recorded image");
}

CheckResult check_dataset_properties() {
  bool ok = true;
  std::string why;
  toy::DomainSpec flat;
  flat.contrast = 0.0;
  flat.noise_sigma = 0.0;
  for (const auto& img : toy::make_dataset(flat, 4, 5)) {
    for (double v : img.data()) ok &= v == img[0];
  }
  if (!ok) why += "contrast 0 not constant; ";
  std::size_t identical = 0;
  for (auto kind : {toy::Texture::kStripes, toy::Texture::kChecker, toy::Texture::kBlobs}) {
    toy::DomainSpec spec;
    spec.kind = kind;
    const auto a = toy::make_dataset(spec, 16, 101);
    const auto b = toy::make_dataset(spec, 16, 202);
    for (const auto& u : a)
      for (const auto& v : b) identical += u == v;
    ok &= toy::make_dataset(spec, 3, 7) == toy::make_dataset(spec, 3, 7);
  }
  if (identical) why += "seeds share an image; ";
  bool rejected = false;
  try {
    toy::DomainSpec bad;
    bad.height = 0;
    toy::make_dataset(bad, 1, 1);
  } catch (const Error&) {
    rejected = true;
  }
  ok = ok && identical == 0 && rejected;
  return result("toy_i2i", "dataset determinism and disjoint seeds", ok,
                static_cast<double>(identical),
                ok ? "contrast 0 constant, 3 textures x 16x16 pairs disjoint, bad extents rejected"
                   : why);
}

CheckResult check_mmd(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> a, b, c;
  for (int i = 0; i < 6; ++i) a.push_back(randn(Shape{1, 4, 4}, rng));
  for (int i = 0; i < 6; ++i) b.push_back(randn(Shape{1, 4, 4}, rng, 1.5));
  for (int i = 0; i < 9; ++i) c.push_back(randn(Shape{1, 4, 4}, rng, 0.7));
  const double same_u = toy::mmd2_unbiased(a, a);
  const double same_b = toy::mmd2_biased(a, a);
  std::vector<Tensor> zeros(4, Tensor(Shape{1, 16, 16}, 0.0));
  std::vector<Tensor> ones(4, Tensor(Shape{1, 16, 16}, 1.0));
  const double closed = 2.0 - 2.0 * std::exp(-0.5);
  const double disjoint = toy::mmd2_unbiased(zeros, ones);
  const double d1 = std::abs(toy::mmd2_unbiased(a, b) - mmd2_oracle(a, b));
  const double d2 = std::abs(toy::mmd2_unbiased(a, c) - mmd2_oracle(a, c));
  bool rejected = false;
  try {
    toy::mmd_metric({}, a);
  } catch (const Error&) {
    rejected = true;
  }
  const double worst = std::max({std::abs(disjoint - closed), d1, d2});
  const bool ok = std::abs(same_u) < 1e-12 && std::abs(same_b) < 1e-12 && disjoint > 0.0 &&
                  worst <= 1e-12 && rejected;
  return result("toy_i2i", "MMD closed form and oracle", ok, worst,
                str("identical sets ", same_u, " / ", same_b, ", all-0 vs all-1 ", disjoint,
                    " vs 2-2e^-0.5, oracle diffs ", d1, ", ", d2));
}

CheckResult check_structure_score(std::uint64_t seed) {
  Rng rng(seed);
  const Tensor x = randn(Shape{1, 8, 8}, rng), y = randn(Shape{1, 8, 8}, rng);
  Tensor neg = x;
  for (double& v : neg.data()) v = -v;
  const double self = toy::structure_score(x, x);
  const double inv = toy::structure_score(x, neg);
  const double diff = std::abs(toy::structure_score(x, y) - structure_oracle(x, y));
  bool rejected = false;
  try {
    toy::structure_score(x, Tensor(Shape{1, 8, 8}, 0.5));
  } catch (const NumericError&) {
    rejected = true;
  }
  const bool ok = std::abs(self - 1.0) < 1e-12 && std::abs(inv + 1.0) < 1e-12 &&
                  diff <= 1e-12 && rejected;
  return result("toy_i2i", "structure score", ok, diff,
                str("self ", self, ", inverted ", inv, ", oracle diff ", diff,
                    ", flat image rejected ", rejected));
}

namespace {

toy::TrainConfig tiny_config() {
  toy::TrainConfig c;
  c.set_image_size(8);
  c.epochs = 2;
  c.batch = 2;
  c.dataset_size = 4;
  c.eval_size = 4;
  c.samples_per_layer = 8;
  return c;
}

}  // namespace

CheckResult check_training_smoke() {
  auto c = tiny_config();
  c.epochs = 1;
  c.batch = 1;
  const auto h = toy::train(c);
  bool finite = true;
  for (const auto& e : h.epochs) {
    for (double v : {e.loss_d, e.loss_gan, e.nce_x, e.nce_y, e.total, e.eval.mmd, e.eval.structure})
      finite &= std::isfinite(v);
  }
  const bool ok = h.epochs.size() == 1 && finite;
  return result("toy_i2i", "one-epoch smoke run", ok, static_cast<double>(h.epochs.size()),
                str(h.epochs.size(), " history row(s), finite ", finite));
}

CheckResult check_training_determinism() {
  const auto c = tiny_config();
  std::ostringstream a, b;
  toy::train(c).write_csv(a);
  toy::train(c).write_csv(b);
  const bool same = a.str() == b.str();
  return result("toy_i2i", "end-to-end determinism", same, same ? 1.0 : 0.0,
                same ? "two runs give byte-identical history CSV" : "history CSV differs");
}

std::vector<CheckResult> run_all_checks(const SuiteSize& size, std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto s = [seed](std::uint64_t k) { return mix_seed(seed, k); };
  // An exception inside a check is a failure of that check, not of the suite.
  auto run = [&out](const char* module, const char* name, const auto& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back(result(module, name, false, 0.0, str("threw: ", e.what())));
    }
  };
  run("tensor_autodiff", "conv_oracle", [&] { return check_conv_oracle(s(1)); });
  run("tensor_autodiff", "fd_detects_wrong_backward", [&] { return check_fd_detects_wrong_backward(); });
  run("tensor_autodiff", "fd_exact_for_linear", [&] { return check_fd_exact_for_linear(s(2)); });
  run("tensor_autodiff", "backward_contract", [&] { return check_backward_contract(s(3)); });
  run("tensor_autodiff", "backward_linearity", [&] { return check_backward_linearity(s(4)); });
  run("tensor_autodiff", "autodiff_determinism", [&] { return check_autodiff_determinism(s(5)); });
  run("tensor_autodiff", "l2_normalize", [&] { return check_l2_normalize(s(6)); });
  run("tensor_autodiff", "gradient_suite", [&] { return check_gradient_suite(size.grad_seeds, s(7), 1e-6); });

  run("patch_features", "encode_oracle", [&] { return check_encode_oracle(s(10)); });
  run("patch_features", "sample_locations_fixture", [&] { return check_sample_locations_fixture(); });
  run("patch_features", "sample_locations_properties", [&] { return check_sample_locations_properties(s(11)); });
  run("patch_features", "project_oracle", [&] { return check_project_oracle(s(12)); });
  run("patch_features", "location_coupling", [&] { return check_location_coupling(s(13)); });
  run("patch_features", "gradient_reach", [&] { return check_gradient_reach(s(14)); });

  run("negative_selection", "similarity_examples", [&] { return check_similarity_examples(s(20)); });
  run("negative_selection", "prune_examples", [&] { return check_prune_examples(); });
  run("negative_selection", "monotone_pruning", [&] { return check_monotone_pruning(size.sweep_rows / 10, s(21)); });
  run("negative_selection", "topk_oracle", [&] { return check_topk_oracle(size.sweep_rows, s(22)); });
  run("negative_selection", "anti_leak", [&] { return check_anti_leak(size.sweep_rows / 10, s(23)); });
  run("negative_selection", "selection_scale_invariance", [&] { return check_selection_scale_invariance(size.sweep_rows / 10, s(24)); });
  run("negative_selection", "selection_fixture", [&] { return check_selection_fixture(s(25)); });

  run("contrastive_losses", "reduction_identity", [&] { return check_reduction_identity(size.reduction_pairs, s(30)); });
  run("contrastive_losses", "closed_forms", [&] { return check_closed_forms(); });
  run("contrastive_losses", "nce_extended_precision", [&] { return check_nce_extended_precision(s(31)); });
  run("contrastive_losses", "rank_nce_subset", [&] { return check_rank_nce_subset(s(32)); });
  run("contrastive_losses", "multilayer_composition", [&] { return check_multilayer_composition(s(33)); });
  run("contrastive_losses", "gan_oracle", [&] { return check_gan_oracle(s(34)); });
  run("contrastive_losses", "loss_monotonicity", [&] { return check_loss_monotonicity(size.sweep_rows / 10, s(35)); });
  run("contrastive_losses", "tau_scale", [&] { return check_tau_scale(size.sweep_rows / 10, s(36)); });
  run("contrastive_losses", "breakdown_sums", [&] { return check_breakdown_sums(s(37)); });
  run("contrastive_losses", "total_objective_recomputation", [&] { return check_total_objective_recomputation(s(38)); });

  run("mi_estimators", "negated_loss_is_bound", [&] { return check_negated_loss_is_bound(size.sweep_rows, s(40)); });
  run("mi_estimators", "ranking_consistency", [&] { return check_ranking_consistency(size.sweep_rows, s(41)); });
  run("mi_estimators", "independent_bound", [&] {
    return check_independent_bound(size.independence_queries, s(46), kIndependenceTau,
                                   kIndependenceDim);
  });
  run("mi_estimators", "multisample_bound", [&] { return check_multisample_bound(s(43)); });
  run("mi_estimators", "conditional_probs", [&] { return check_conditional_probs(s(44)); });
  run("mi_estimators", "bound_dual_route", [&] { return check_bound_dual_route(s(45)); });

  run("toy_i2i", "dataset_fixture", [&] { return check_dataset_fixture(); });
  run("toy_i2i", "dataset_properties", [&] { return check_dataset_properties(); });
  run("toy_i2i", "mmd", [&] { return check_mmd(s(50)); });
  run("toy_i2i", "structure_score", [&] { return check_structure_score(s(51)); });
  run("toy_i2i", "training_smoke", [&] { return check_training_smoke(); });
  run("toy_i2i", "training_determinism", [&] { return check_training_determinism(); });
  return out;
}

}  // namespace ranknce::verify
