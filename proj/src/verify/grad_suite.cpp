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
#include <functional>
#include <limits>
#include <memory>
#include <numeric>

#include "common.hpp"
#include "ranknce/error.hpp"
#include "ranknce/gradcheck.hpp"
#include "ranknce/losses.hpp"
#include "ranknce/negative_selection.hpp"
#include "ranknce/ops.hpp"
#include "ranknce/patch_features.hpp"

namespace ranknce::verify {
namespace {

using detail::randn;
using detail::rand_unit_rows;

struct Problem {
  Tensor x;
  ScalarFn f;
};

using Builder = std::function<Problem(Rng&)>;

// sum(y * r): a random linear read-out so every output coordinate carries a
// distinct upstream gradient.
Var weigh(Tape& t, Var y, const Tensor& r) {
  return ops::sum(ops::mul(y, t.constant(r.reshaped(y.shape()))));
}

Builder unary(Var (*op)(Var), std::size_t n, double stddev, bool positive = false) {
  return [=](Rng& rng) {
    Tensor x = randn(Shape{n}, rng, stddev);
    if (positive) {
      for (double& v : x.data()) v = std::exp(v);
    }
    const Tensor r = randn(Shape{n}, rng);
    return Problem{x, [=](Tape& t, Var v) { return weigh(t, op(v), r); }};
  };
}

// Small encoder + heads used by the pipeline cases.
struct Pipeline {
  features::EncoderSpec spec;
  Tensor k1, b1, k2, b2;
  Tensor hw1[2], hb1[2], hw2[2], hb2[2];
  Tensor real_img, fake_img;
  std::vector<std::vector<std::size_t>> locations;

  explicit Pipeline(Rng& rng) {
    spec.in_channels = 1;
    spec.height = 6;
    spec.width = 6;
    spec.stage_channels = {3, 4};
    spec.tap_layers = {1, 2};
    k1 = randn(Shape{3, 1, 3, 3}, rng, 0.6);
    b1 = randn(Shape{3}, rng, 0.1);
    k2 = randn(Shape{4, 3, 3, 3}, rng, 0.4);
    b2 = randn(Shape{4}, rng, 0.1);
    const std::size_t widths[] = {3, 4};
    for (int l = 0; l < 2; ++l) {
      hw1[l] = randn(Shape{widths[l], 5}, rng, 0.8);
      hb1[l] = randn(Shape{5}, rng, 0.1);
      hw2[l] = randn(Shape{5, 5}, rng, 0.5);
      hb2[l] = randn(Shape{5}, rng, 0.1);
    }
    real_img = randn(Shape{1, 6, 6}, rng);
    fake_img = randn(Shape{1, 6, 6}, rng);
    for (int l = 0; l < 2; ++l) locations.push_back(features::sample_locations(36, 7, rng));
  }

  // which: 0 = none, 1 = first conv kernel, 2 = second-layer head w1,
  // 3 = second conv kernel
  Var loss(Tape& t, Var leaf, int which) const {
    std::vector<features::ConvStage> stages{
        {which == 1 ? leaf : t.constant(k1), t.constant(b1)},
        {which == 3 ? leaf : t.constant(k2), t.constant(b2)}};
    std::vector<features::ProjectionHead> heads;
    for (int l = 0; l < 2; ++l) {
      heads.push_back({which == 2 && l == 1 ? leaf : t.constant(hw1[l]), t.constant(hb1[l]),
                       t.constant(hw2[l]), t.constant(hb2[l])});
    }
    const auto real_taps = features::encode(t.constant(real_img), stages, spec);
    const auto fake_taps = features::encode(t.constant(fake_img), stages, spec);
    const auto real = features::project(real_taps, locations, heads, spec.tap_layers, true);
    const auto fake = features::project(fake_taps, locations, heads, spec.tap_layers, true);
    losses::RankNceOptions opts;
    opts.k = 3;
    opts.theta = 0.0;
    opts.empty_rows = selection::EmptyRowPolicy::kKeep;
    return losses::multilayer_rank_nce(real, fake, opts).value;
  }
};

// Minimal translation model whose output conv kernel is the leaf under test.
class ProbeModel final : public losses::TranslationModel {
 public:
  ProbeModel(Tape& t, const Pipeline& p, Var out_kernel, const Tensor& out_bias,
             const Tensor& disc_kernel)
      : p_(p),
        out_kernel_(out_kernel),
        out_bias_(t.constant(out_bias)),
        disc_kernel_(t.constant(disc_kernel)),
        disc_bias_(t.constant(Tensor(Shape{1}, 0.05))) {
    stages_ = {{t.constant(p.k1), t.constant(p.b1)}, {t.constant(p.k2), t.constant(p.b2)}};
    for (int l = 0; l < 2; ++l) {
      heads_.push_back({t.constant(p.hw1[l]), t.constant(p.hb1[l]), t.constant(p.hw2[l]),
                        t.constant(p.hb2[l])});
    }
  }

  std::pair<Var, std::vector<Var>> translate_with_taps(Var image) const override {
    auto taps = encode(image);
    // Damped so the 1/tau logits do not amplify an output-kernel step into
    // a near-kink; see kMaxTruncation.
    Var out = ops::tanh(ops::conv2d(ops::scale(taps.back(), 0.25), out_kernel_, out_bias_));
    return {out, std::move(taps)};
  }
  std::vector<Var> encode(Var image) const override {
    return features::encode(image, stages_, p_.spec);
  }
  Var discriminate(Var image) const override {
    return ops::mean(ops::conv2d(image, disc_kernel_, disc_bias_));
  }
  std::span<const features::ProjectionHead> heads() const override { return heads_; }
  std::vector<std::size_t> tap_layers() const override { return p_.spec.tap_layers; }

 private:
  const Pipeline& p_;
  Var out_kernel_, out_bias_, disc_kernel_, disc_bias_;
  std::vector<features::ConvStage> stages_;
  std::vector<features::ProjectionHead> heads_;
};

Var stack_loss(Tape& t, Var fake, Var real, std::size_t s, losses::NceAggregation agg) {
  features::FeatureStack fs, rs;
  std::vector<std::size_t> locs(s);
  std::iota(locs.begin(), locs.end(), std::size_t{0});
  fs.layers.push_back({1, locs, ops::l2_normalize_rows(fake)});
  rs.layers.push_back({1, locs, ops::l2_normalize_rows(real)});
  // A second layer that depends on the same inputs through a nonlinearity.
  fs.layers.push_back({2, locs, ops::l2_normalize_rows(ops::tanh(fake))});
  rs.layers.push_back({2, locs, ops::l2_normalize_rows(ops::tanh(real))});
  fs.normalized = rs.normalized = true;
  losses::RankNceOptions opts;
  opts.k = 3;
  opts.theta = 0.0;
  opts.aggregation = agg;
  opts.empty_rows = selection::EmptyRowPolicy::kKeep;
  (void)t;
  return losses::multilayer_rank_nce(rs, fs, opts).value;
}

const std::vector<std::pair<std::string, Builder>>& cases() {
  static const std::vector<std::pair<std::string, Builder>> all = [] {
    std::vector<std::pair<std::string, Builder>> c;
    c.emplace_back("add", [](Rng& rng) {
      Tensor x = randn(Shape{6}, rng), k = randn(Shape{6}, rng), r = randn(Shape{6}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return weigh(t, ops::add(ops::add(v, t.constant(k)), v), r);
      }};
    });
    c.emplace_back("sub", [](Rng& rng) {
      Tensor x = randn(Shape{6}, rng), k = randn(Shape{6}, rng), r = randn(Shape{6}, rng);
      return Problem{x, [=](Tape& t, Var v) { return weigh(t, ops::sub(t.constant(k), v), r); }};
    });
    c.emplace_back("mul", [](Rng& rng) {
      Tensor x = randn(Shape{6}, rng), k = randn(Shape{6}, rng), r = randn(Shape{6}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return weigh(t, ops::mul(ops::mul(v, t.constant(k)), v), r);
      }};
    });
    c.emplace_back("scale_shift", [](Rng& rng) {
      Tensor x = randn(Shape{6}, rng), r = randn(Shape{6}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        Var s = ops::shift(ops::scale(v, -1.7), 0.3);
        return weigh(t, ops::mul(s, s), r);
      }};
    });
    c.emplace_back("relu", unary(ops::relu, 8, 1.0));
    c.emplace_back("tanh", unary(ops::tanh, 8, 1.0));
    c.emplace_back("exp", unary(ops::exp, 8, 0.5));
    c.emplace_back("log", unary(ops::log, 8, 0.5, true));
    c.emplace_back("softplus", unary(ops::softplus, 8, 2.0));
    c.emplace_back("matmul_lhs", [](Rng& rng) {
      Tensor x = randn(Shape{3, 4}, rng), b = randn(Shape{4, 2}, rng), r = randn(Shape{6}, rng);
      return Problem{x, [=](Tape& t, Var v) { return weigh(t, ops::matmul(v, t.constant(b)), r); }};
    });
    c.emplace_back("matmul_rhs", [](Rng& rng) {
      Tensor a = randn(Shape{3, 4}, rng), x = randn(Shape{4, 2}, rng), r = randn(Shape{6}, rng);
      return Problem{x, [=](Tape& t, Var v) { return weigh(t, ops::matmul(t.constant(a), v), r); }};
    });
    c.emplace_back("matmul_self", [](Rng& rng) {
      Tensor x = randn(Shape{3, 3}, rng), r = randn(Shape{9}, rng);
      return Problem{x, [=](Tape& t, Var v) { return weigh(t, ops::matmul(v, ops::transpose(v)), r); }};
    });
    c.emplace_back("transpose", [](Rng& rng) {
      Tensor x = randn(Shape{2, 5}, rng), k = randn(Shape{5, 2}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        Var y = ops::transpose(v);
        return ops::sum(ops::mul(ops::mul(y, y), t.constant(k)));
      }};
    });
    c.emplace_back("add_row_bias", [](Rng& rng) {
      Tensor x = randn(Shape{3, 4}, rng), b = randn(Shape{4}, rng), r = randn(Shape{12}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return weigh(t, ops::tanh(ops::add_row_bias(v, t.constant(b))), r);
      }};
    });
    c.emplace_back("add_row_bias_bias", [](Rng& rng) {
      Tensor m = randn(Shape{3, 4}, rng), x = randn(Shape{4}, rng), r = randn(Shape{12}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return weigh(t, ops::tanh(ops::add_row_bias(t.constant(m), v)), r);
      }};
    });
    c.emplace_back("sum_mean", [](Rng& rng) {
      Tensor x = randn(Shape{7}, rng), k = randn(Shape{7}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return ops::mul(ops::sum(ops::mul(v, t.constant(k))), ops::mean(ops::tanh(v)));
      }};
    });
    c.emplace_back("softmax_ce", [](Rng& rng) {
      Tensor x = randn(Shape{7}, rng, 2.0);
      const std::size_t target = static_cast<std::size_t>(rng.index(7));
      return Problem{x, [=](Tape&, Var v) { return ops::softmax_ce(v, target); }};
    });
    c.emplace_back("conv2d_input", [](Rng& rng) {
      Tensor x = randn(Shape{2, 5, 4}, rng), w = randn(Shape{3, 2, 3, 3}, rng),
             b = randn(Shape{3}, rng), r = randn(Shape{60}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return weigh(t, ops::conv2d(v, t.constant(w), t.constant(b)), r);
      }};
    });
    c.emplace_back("conv2d_kernel", [](Rng& rng) {
      Tensor in = randn(Shape{2, 5, 4}, rng), x = randn(Shape{3, 2, 3, 3}, rng),
             b = randn(Shape{3}, rng), r = randn(Shape{60}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return weigh(t, ops::conv2d(t.constant(in), v, t.constant(b)), r);
      }};
    });
    c.emplace_back("conv2d_bias", [](Rng& rng) {
      Tensor in = randn(Shape{2, 5, 4}, rng), w = randn(Shape{3, 2, 3, 3}, rng),
             x = randn(Shape{3}, rng), r = randn(Shape{60}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return weigh(t, ops::tanh(ops::conv2d(t.constant(in), t.constant(w), v)), r);
      }};
    });
    c.emplace_back("l2_normalize", [](Rng& rng) {
      Tensor x = randn(Shape{8}, rng), r = randn(Shape{8}, rng);
      return Problem{x, [=](Tape& t, Var v) { return weigh(t, ops::l2_normalize(v), r); }};
    });
    c.emplace_back("l2_normalize_rows", [](Rng& rng) {
      Tensor x = randn(Shape{4, 5}, rng), r = randn(Shape{20}, rng);
      return Problem{x, [=](Tape& t, Var v) { return weigh(t, ops::l2_normalize_rows(v), r); }};
    });
    c.emplace_back("gather", [](Rng& rng) {
      Tensor x = randn(Shape{6}, rng), r = randn(Shape{5}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        Var g = ops::gather(v, {3, 0, 3, 5, 1});
        return weigh(t, ops::mul(g, g), r);
      }};
    });
    c.emplace_back("concat_reshape", [](Rng& rng) {
      Tensor x = randn(Shape{4}, rng), k = randn(Shape{2}, rng), r = randn(Shape{10}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        const Var parts[] = {v, t.constant(k), ops::tanh(v)};
        Var m = ops::reshape(ops::concat(parts), Shape{2, 5});
        return weigh(t, ops::mul(m, m), r);
      }};
    });
    c.emplace_back("mask_diagonal", [](Rng& rng) {
      Tensor x = randn(Shape{4, 4}, rng), r = randn(Shape{16}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return weigh(t, ops::tanh(ops::mask_diagonal(v)), r);
      }};
    });

    // Composite losses.
    c.emplace_back("patch_nce", [](Rng& rng) {
      Tensor x = randn(Shape{16}, rng, 0.3);
      return Problem{x, [=](Tape&, Var v) {
        std::vector<std::size_t> neg(15);
        std::iota(neg.begin(), neg.end(), std::size_t{1});
        return losses::patch_nce(ops::gather(v, {0}), ops::gather(v, neg), 0.07).value;
      }};
    });
    c.emplace_back("patch_nce_layer", [](Rng& rng) {
      Tensor x = rand_unit_rows(6, 4, rng), real = rand_unit_rows(6, 4, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return losses::patch_nce_layer(ops::l2_normalize_rows(v), t.constant(real), 0.07).value;
      }};
    });
    c.emplace_back("rank_nce_query", [](Rng& rng) {
      Tensor x = randn(Shape{6, 4}, rng), real = rand_unit_rows(6, 4, rng);
      return Problem{x, [=](Tape& t, Var v) {
        const auto sel = selection::select_negatives(ops::l2_normalize_rows(v), t.constant(real),
                                                     -0.2, 2, selection::EmptyRowPolicy::kKeep);
        std::vector<Var> terms;
        for (std::size_t q = 0; q < 6; ++q) {
          if (sel.negatives.rows[q].indices.empty()) continue;
          terms.push_back(losses::rank_nce(sel.similarity, sel.negatives, q, 0.07).value);
        }
        if (terms.empty()) return t.constant(Tensor::scalar(0.0));
        return ops::sum(ops::concat(terms));
      }};
    });
    c.emplace_back("multilayer_rank_nce_fake", [](Rng& rng) {
      Tensor x = randn(Shape{6, 4}, rng), real = randn(Shape{6, 4}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return stack_loss(t, v, t.constant(real), 6, losses::NceAggregation::kMeanOverLocations);
      }};
    });
    c.emplace_back("multilayer_rank_nce_real", [](Rng& rng) {
      Tensor fake = randn(Shape{6, 4}, rng), x = randn(Shape{6, 4}, rng);
      return Problem{x, [=](Tape& t, Var v) {
        return stack_loss(t, t.constant(fake), v, 6, losses::NceAggregation::kSum);
      }};
    });
    for (auto variant : {losses::GanVariant::kNonSaturating, losses::GanVariant::kMinimax,
                         losses::GanVariant::kLeastSquares}) {
      const std::string tag = variant == losses::GanVariant::kNonSaturating ? "ns"
                              : variant == losses::GanVariant::kMinimax     ? "minimax"
                                                                            : "lsq";
      c.emplace_back("gan_d_" + tag, [variant](Rng& rng) {
        Tensor x = randn(Shape{8}, rng, 2.0);
        return Problem{x, [=](Tape&, Var v) {
          return losses::gan_loss_d(ops::gather(v, {0, 1, 2, 3}), ops::gather(v, {4, 5, 6, 7}),
                                    variant)
              .value;
        }};
      });
      c.emplace_back("gan_g_" + tag, [variant](Rng& rng) {
        Tensor x = randn(Shape{4}, rng, 2.0);
        return Problem{x, [=](Tape&, Var v) { return losses::gan_loss_g(v, variant).value; }};
      });
    }
    c.emplace_back("pipeline_encoder_kernel", [](Rng& rng) {
      auto p = std::make_shared<Pipeline>(rng);
      return Problem{p->k1, [=](Tape& t, Var v) { return p->loss(t, v, 1); }};
    });
    c.emplace_back("pipeline_head_weight", [](Rng& rng) {
      auto p = std::make_shared<Pipeline>(rng);
      return Problem{p->hw1[1], [=](Tape& t, Var v) { return p->loss(t, v, 2); }};
    });
    c.emplace_back("total_objective", [](Rng& rng) {
      auto p = std::make_shared<Pipeline>(rng);
      Tensor x = randn(Shape{1, 4, 3, 3}, rng, 0.3);
      Tensor out_bias = randn(Shape{1}, rng, 0.1);
      Tensor disc = randn(Shape{1, 1, 3, 3}, rng, 0.5);
      std::vector<Tensor> xs{randn(Shape{1, 6, 6}, rng), randn(Shape{1, 6, 6}, rng)};
      std::vector<Tensor> ys{randn(Shape{1, 6, 6}, rng), randn(Shape{1, 6, 6}, rng)};
      const std::uint64_t sample_seed = rng.next_u64();
      return Problem{x, [=](Tape& t, Var v) {
        ProbeModel model(t, *p, v, out_bias, disc);
        std::vector<Var> xv, yv;
        for (const auto& i : xs) xv.push_back(t.constant(i));
        for (const auto& i : ys) yv.push_back(t.constant(i));
        losses::ObjectiveConfig cfg;
        cfg.weights.k = 3;
        cfg.weights.theta = 0.0;
        cfg.samples_per_layer = 7;
        Rng sampling(sample_seed);
        return losses::total_objective(model, xv, yv, cfg, sampling).total;
      }};
    });
    return c;
  }();
  return all;
}

}  // namespace

std::vector<std::string> gradient_case_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : cases()) names.push_back(name);
  return names;
}

std::vector<GradCaseReport> gradient_suite(std::size_t seeds, std::uint64_t base_seed,
                                           double eps) {
  constexpr std::size_t kMaxDrawsPerSeed = 50;
  std::vector<GradCaseReport> reports;
  for (std::size_t c = 0; c < cases().size(); ++c) {
    const auto& [name, build] = cases()[c];
    GradCaseReport rep;
    rep.name = name;
    for (std::size_t s = 0; s < seeds; ++s) {
      const std::uint64_t seed = mix_seed(base_seed, c * 1000003 + s);
      Rng rng(seed);
      std::size_t draws = 0;
      for (;; ++draws) {
        if (draws == kMaxDrawsPerSeed) {
          throw Error("gradient suite: no usable draw for case " + name);
        }
        Problem prob = build(rng);
        const FdReport r = fd_check(prob.f, prob.x, eps);
        if (r.branch_flips > 0) {
          ++rep.redrawn_kink;
          continue;
        }
        if (r.truncation_estimate > kMaxTruncation) {
          ++rep.redrawn_stiff;
          continue;
        }
        if (rep.evaluated == 0 || r.max_rel_error > rep.max_rel_error) {
          rep.max_rel_error = r.max_rel_error;
          rep.worst_seed = seed;
        }
        ++rep.evaluated;
        break;
      }
    }
    reports.push_back(rep);
  }
  return reports;
}

CheckResult check_gradient_reach(std::uint64_t seed) {
  // A single draw can leave an entry at exactly zero (a channel active only
  // where a tap reads padding), so reach is judged over several draws.
  constexpr int kDraws = 4;
  Rng rng(seed);
  double worst = 0.0;
  std::size_t unreached = 0, entries = 0;
  for (int which : {1, 3}) {
    std::vector<bool> reached;
    int accepted = 0;
    for (int draw = 0; accepted < kDraws; ++draw) {
      if (draw == 50 * kDraws) throw Error("gradient reach: no usable draw");
      Pipeline p(rng);
      const Tensor& w = which == 1 ? p.k1 : p.k2;
      ScalarFn f = [&p, which](Tape& t, Var v) { return p.loss(t, v, which); };
      const FdReport r = fd_check(f, w);
      if (r.branch_flips > 0 || r.truncation_estimate > kMaxTruncation) continue;
      worst = std::max(worst, r.max_rel_error);
      Tape t;
      Var leaf = t.leaf(w);
      t.backward(p.loss(t, leaf, which));
      const Tensor g = leaf.grad();
      reached.resize(g.numel(), false);
      for (std::size_t i = 0; i < g.numel(); ++i) reached[i] = reached[i] || g[i] != 0.0;
      ++accepted;
    }
    entries += reached.size();
    unreached += std::count(reached.begin(), reached.end(), false);
  }
  const bool ok = worst <= 1e-6 && unreached == 0;
  return detail::result("patch_features", "gradient reach", ok, worst,
                        detail::str(entries, " encoder weights over ", kDraws, " draws, ",
                                    unreached, " never reached, fd error ", worst));
}

CheckResult check_gradient_suite(std::size_t seeds, std::uint64_t base_seed, double tol) {
  const auto reports = gradient_suite(seeds, base_seed);
  double worst = 0.0;
  std::string worst_case;
  std::size_t kinks = 0, stiff = 0;
  for (const auto& r : reports) {
    kinks += r.redrawn_kink;
    stiff += r.redrawn_stiff;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_case = r.name;
    }
  }
  return detail::result("tensor_autodiff", "gradient correctness", worst <= tol, worst,
                        detail::str(reports.size(), " cases x ", seeds,
                                    " seeds, worst ", worst, " (", worst_case, "), ",
                                    kinks, " draws redrawn at kinks, ", stiff,
                                    " for truncation"));
}

}  // namespace ranknce::verify
