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

#include <cmath>
#include <numeric>

#include "common.hpp"
#include "ranknce/error.hpp"
#include "ranknce/gradcheck.hpp"
#include "ranknce/losses.hpp"
#include "ranknce/ops.hpp"
#include "ranknce/patch_features.hpp"
#include "ranknce/verify/fixtures.hpp"
#include "ranknce/verify/oracles.hpp"

namespace ranknce::verify {

using detail::max_abs_diff;
using detail::randn;
using detail::result;
using detail::str;

CheckResult check_conv_oracle(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  // 1x4x4 single-channel case plus a multi-channel, non-square one.
  const Shape inputs[] = {{1, 4, 4}, {3, 5, 7}};
  const std::size_t outs[] = {2, 4};
  for (int c = 0; c < 2; ++c) {
    Tensor x = randn(inputs[c], rng);
    Tensor w = randn(Shape{outs[c], inputs[c][0], 3, 3}, rng);
    Tensor b = randn(Shape{outs[c]}, rng);
    Tape t;
    Var y = ops::conv2d(t.constant(x), t.constant(w), t.constant(b));
    worst = std::max(worst, max_abs_diff(y.value(), naive_conv2d(x, w, b)));
  }
  return result("tensor_autodiff", "conv2d equals nested-loop oracle", worst <= 1e-12, worst,
                str("max abs diff ", worst));
}

CheckResult check_fd_detects_wrong_backward() {
  // y = x^2 whose backward claims 3x.
  ScalarFn bad = [](Tape& t, Var x) {
    Tensor v = x.value();
    for (double& e : v.data()) e = e * e;
    const NodeId in = x.id();
    Var y = t.record("bad_square", std::move(v), {in}, [in](Tape& tp, NodeId self) {
      const Tensor& xv = tp.value(in);
      auto g = tp.grad_buffer(self);
      std::vector<double> d(xv.numel());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = 3.0 * xv[i] * g[i];
      tp.accumulate(in, d);
    });
    return ops::sum(y);
  };
  const double err = fd_check(bad, Tensor::vector({0.5, -1.25, 2.0})).max_rel_error;
  return result("tensor_autodiff", "fd_check flags an injected backward bug", err > 1e-2, err,
                str("reported error ", err));
}

CheckResult check_fd_exact_for_linear(std::uint64_t seed) {
  Rng rng(seed);
  const Tensor k = randn(Shape{9}, rng);
  ScalarFn f = [k](Tape& t, Var x) { return ops::sum(ops::mul(x, t.constant(k))); };
  const double err = fd_check(f, randn(Shape{9}, rng)).max_rel_error;
  return result("tensor_autodiff", "fd_check exact on a linear form", err <= 1e-10, err,
                str("error ", err));
}

CheckResult check_backward_contract(std::uint64_t seed) {
  Rng rng(seed);
  const Tensor xv = randn(Shape{5}, rng);
  bool ok = true;
  std::string why;
  {
    Tape t;
    Var x = t.leaf(xv);
    t.backward(ops::sum(x));
    const Tensor g = x.grad();
    for (double e : g.data()) ok &= e == 1.0;
    if (!ok) why += "sum gradient not all-ones; ";
  }
  {
    Tape t;
    Var x = t.leaf(xv);
    Var unused = t.leaf(xv);
    t.backward(ops::mean(ops::mul(x, x)));
    const Tensor g = x.grad();
    for (std::size_t i = 0; i < 5; ++i) {
      if (std::abs(g[i] - 2.0 * xv[i] / 5.0) > 1e-15) {
        ok = false;
        why += "mean(x*x) gradient differs from 2x/n; ";
        break;
      }
    }
    const Tensor gu = unused.grad();
    for (double e : gu.data()) {
      if (e != 0.0) {
        ok = false;
        why += "unreached leaf has nonzero gradient; ";
        break;
      }
    }
    // Fan-out: x used twice accumulates both paths.
    Tape t2;
    Var y = t2.leaf(xv);
    t2.backward(ops::sum(ops::add(y, y)));
    const Tensor gy = y.grad();
    for (double e : gy.data()) ok &= e == 2.0;
    try {
      t.backward(x);
      ok = false;
      why += "non-scalar root accepted; ";
    } catch (const ShapeError&) {
    }
  }
  return result("tensor_autodiff", "backward contract", ok, ok ? 1.0 : 0.0,
                ok ? "sum, mean(x*x), fan-out, unreached leaf, non-scalar root" : why);
}

CheckResult check_backward_linearity(std::uint64_t seed) {
  Rng rng(seed);
  const Tensor xv = randn(Shape{3, 4}, rng);
  const Tensor a = randn(Shape{4, 3}, rng);
  const Tensor w = randn(Shape{2, 1, 3, 3}, rng);
  const Tensor b = randn(Shape{2}, rng);
  // x enters each function through exactly one op, so the combined gradient
  // is a single sum of two exactly-scaled terms.
  auto f = [&](Tape& t, Var x) {
    return ops::mean(ops::tanh(ops::matmul(x, t.constant(a))));
  };
  auto g = [&](Tape& t, Var x) {
    Var img = ops::reshape(ops::exp(x), Shape{1, 3, 4});
    return ops::sum(ops::softplus(ops::conv2d(img, t.constant(w), t.constant(b))));
  };
  auto grad_of = [&](auto fn) {
    Tape t;
    Var x = t.leaf(xv);
    t.backward(fn(t, x));
    return x.grad();
  };
  const double ca = 2.0, cb = -0.25;
  const Tensor gf = grad_of(f), gg = grad_of(g);
  const Tensor gc = grad_of([&](Tape& t, Var x) {
    return ops::add(ops::scale(f(t, x), ca), ops::scale(g(t, x), cb));
  });
  bool exact = true;
  for (std::size_t i = 0; i < gc.numel(); ++i) exact &= gc[i] == ca * gf[i] + cb * gg[i];
  return result("tensor_autodiff", "linearity of backward", exact, exact ? 0.0 : 1.0,
                exact ? "bit-exact with power-of-two coefficients" : "combined gradient differs");
}

CheckResult check_autodiff_determinism(std::uint64_t seed) {
  auto run = [seed] {
    Rng rng(seed);
    const Tensor x = randn(Shape{1, 6, 6}, rng);
    const Tensor w = randn(Shape{3, 1, 3, 3}, rng);
    const Tensor h = randn(Shape{3, 4}, rng);
    Tape t;
    Var k = t.leaf(w);
    Var act = ops::relu(ops::conv2d(t.constant(x), k, t.constant(Tensor(Shape{3}))));
    Var feats = ops::l2_normalize_rows(ops::add_row_bias(
        ops::matmul(ops::transpose(ops::reshape(act, Shape{3, 36})), t.constant(h)),
        t.constant(Tensor(Shape{4}, 0.1))));
    Var loss = losses::patch_nce_layer(feats, feats, 0.07).value;
    t.backward(loss);
    return std::pair{loss.value(), k.grad()};
  };
  const auto a = run(), b = run();
  const bool same = a.first == b.first && a.second == b.second;
  return result("tensor_autodiff", "determinism", same, same ? 1.0 : 0.0,
                same ? "values and gradients bit-identical" : "runs differ");
}

CheckResult check_l2_normalize(std::uint64_t seed) {
  Tape t;
  bool ok = true;
  const Tensor n = ops::l2_normalize(t.constant(Tensor::vector({3, 4}))).value();
  ok &= std::abs(n[0] - 0.6) < 1e-15 && std::abs(n[1] - 0.8) < 1e-15;
  const Tensor unit = Tensor::vector({0.6, 0.8});
  ok &= max_abs_diff(ops::l2_normalize(t.constant(unit)).value(), unit) < 1e-15;
  bool named = false;
  try {
    ops::l2_normalize_rows(t.constant(Tensor::matrix(3, 2, {1, 0, 0, 0, 0, 1})));
  } catch (const NumericError& e) {
    named = std::string(e.what()).find("patch index 1") != std::string::npos;
  }
  Rng rng(seed);
  ScalarFn f = [r = randn(Shape{8}, rng)](Tape& tp, Var x) {
    return ops::sum(ops::mul(ops::l2_normalize(x), tp.constant(r)));
  };
  const double err = fd_check(f, randn(Shape{8}, rng)).max_rel_error;
  ok = ok && named && err <= 1e-6;
  return result("tensor_autodiff", "l2_normalize examples", ok, err,
                str("[3,4] -> [0.6,0.8], unit fixed point, zero row named: ", named,
                    ", fd error ", err));
}

CheckResult check_encode_oracle(std::uint64_t seed) {
  Rng rng(seed);
  features::EncoderSpec spec;
  spec.height = spec.width = 4;
  spec.stage_channels = {3};
  spec.tap_layers = {1};
  const Tensor x = randn(Shape{1, 4, 4}, rng);
  const Tensor w = randn(Shape{3, 1, 3, 3}, rng);
  const Tensor b = randn(Shape{3}, rng);
  Tape t;
  const features::ConvStage stage{t.constant(w), t.constant(b)};
  const auto taps = features::encode(t.constant(x), std::span(&stage, 1), spec);
  const double diff = max_abs_diff(taps.at(0).value(), naive_relu(naive_conv2d(x, w, b)));
  // zero image, zero weights, zero bias -> zero activations
  const features::ConvStage zero{t.constant(Tensor(Shape{3, 1, 3, 3})),
                                 t.constant(Tensor(Shape{3}))};
  const auto z = features::encode(t.constant(Tensor(Shape{1, 4, 4})), std::span(&zero, 1), spec);
  bool zeros = true;
  for (double v : z.at(0).value().data()) zeros &= v == 0.0;
  return result("patch_features", "encode equals conv+relu oracle", diff <= 1e-12 && zeros, diff,
                str("max abs diff ", diff, ", zero case ", zeros));
}

CheckResult check_sample_locations_fixture() {
  Rng rng(kLocationFixtureSeed);
  const auto got = features::sample_locations(256, 16, rng);
  const bool same = std::equal(got.begin(), got.end(), kLocationFixture.begin(),
                               kLocationFixture.end());
  return result("patch_features", "sample_locations frozen fixture", same, same ? 1.0 : 0.0,
                same ? "16 of 256 positions match the recorded list" : "recorded list differs");
}

CheckResult check_sample_locations_properties(std::uint64_t seed) {
  Rng rng(seed);
  bool ok = true;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    const std::size_t positions = 1 + rng.index(64);
    const std::size_t count = 1 + rng.index(positions);
    const auto locs = features::sample_locations(positions, count, rng);
    ok &= locs.size() == count && std::is_sorted(locs.begin(), locs.end()) &&
          std::adjacent_find(locs.begin(), locs.end()) == locs.end() && locs.back() < positions;
  }
  const auto all = features::sample_locations(16, 16, rng);
  for (std::size_t i = 0; i < all.size(); ++i) ok &= all[i] == i;
  bool threw = false;
  try {
    features::sample_locations(4, 5, rng);
  } catch (const ShapeError&) {
    threw = true;
  }
  Rng a(seed + 1), b(seed + 1);
  ok &= features::sample_locations(256, 16, a) == features::sample_locations(256, 16, b);
  ok &= threw;
  return result("patch_features", "locations distinct, sorted, deterministic", ok, ok ? 1.0 : 0.0,
                "200 random draws, exhaustive case, oversized request rejected");
}

CheckResult check_project_oracle(std::uint64_t seed) {
  Rng rng(seed);
  const Tensor act = randn(Shape{3, 5, 5}, rng);
  const Tensor w1 = randn(Shape{3, 6}, rng), b1 = randn(Shape{6}, rng);
  const Tensor w2 = randn(Shape{6, 6}, rng), b2 = randn(Shape{6}, rng);
  const auto locs = features::sample_locations(25, 9, rng);
  double worst = 0.0, norm_err = 0.0;
  for (bool normalize : {false, true}) {
    Tape t;
    const features::ProjectionHead head{t.constant(w1), t.constant(b1), t.constant(w2),
                                        t.constant(b2)};
    const Tensor got = features::project_layer(t.constant(act), locs, head, normalize).value();
    worst = std::max(worst, max_abs_diff(got, head_oracle(act, locs, w1, b1, w2, b2, normalize)));
    if (normalize) {
      for (std::size_t r = 0; r < got.dim(0); ++r) {
        double n = 0.0;
        for (std::size_t c = 0; c < got.dim(1); ++c) n += got.at(r, c) * got.at(r, c);
        norm_err = std::max(norm_err, std::abs(std::sqrt(n) - 1.0));
      }
    }
  }
  // identity head, no normalization -> raw activation columns
  Tape t;
  const features::ProjectionHead id{t.constant(Tensor::identity(3)), t.constant(Tensor(Shape{3})),
                                    t.constant(Tensor::identity(3)), t.constant(Tensor(Shape{3}))};
  const Tensor relu_act = naive_relu(act);
  const Tensor raw = features::project_layer(t.constant(relu_act), locs, id, false).value();
  double raw_err = 0.0;
  for (std::size_t s = 0; s < locs.size(); ++s)
    for (std::size_t c = 0; c < 3; ++c)
      raw_err = std::max(raw_err, std::abs(raw.at(s, c) - relu_act[c * 25 + locs[s]]));
  const bool ok = worst <= 1e-12 && norm_err <= 1e-9 && raw_err == 0.0;
  return result("patch_features", "projection equals matrix replay", ok, worst,
                str("max abs diff ", worst, ", unit-norm error ", norm_err,
                    ", identity-head error ", raw_err));
}

CheckResult check_location_coupling(std::uint64_t seed) {
  Rng rng(seed);
  Tape t;
  const Var real = t.constant(randn(Shape{4, 3}, rng));
  const Var fake = t.constant(randn(Shape{4, 3}, rng));
  features::FeatureStack rs, fs;
  rs.layers.push_back({1, {0, 1, 2, 3}, real});
  fs.layers.push_back({1, {0, 1, 2, 4}, fake});
  losses::RankNceOptions opts;
  opts.theta = -std::numeric_limits<double>::infinity();
  bool rejected = false;
  try {
    losses::multilayer_rank_nce(rs, fs, opts);
  } catch (const ShapeError&) {
    rejected = true;
  }
  fs.layers[0].locations = rs.layers[0].locations;
  bool accepted = true;
  try {
    losses::multilayer_rank_nce(rs, fs, opts);
  } catch (const Error&) {
    accepted = false;
  }
  const bool ok = rejected && accepted;
  return result("patch_features", "location coupling", ok, ok ? 1.0 : 0.0,
                str("mismatched locations rejected: ", rejected, ", matched accepted: ", accepted));
}

}  // namespace ranknce::verify
