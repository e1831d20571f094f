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

#include <gtest/gtest.h>

#include "check_matchers.hpp"
#include "ranknce/error.hpp"
#include "ranknce/gradcheck.hpp"
#include "ranknce/ops.hpp"

namespace ranknce {
namespace {

constexpr std::uint64_t kSeed = 7;

TEST(TensorAutodiff, ConvMatchesLoopOracle) { EXPECT_CHECK(verify::check_conv_oracle(kSeed)); }
TEST(TensorAutodiff, FdCheckCatchesWrongBackward) {
  EXPECT_CHECK(verify::check_fd_detects_wrong_backward());
}
TEST(TensorAutodiff, FdCheckExactOnLinear) { EXPECT_CHECK(verify::check_fd_exact_for_linear(kSeed)); }
TEST(TensorAutodiff, BackwardContract) { EXPECT_CHECK(verify::check_backward_contract(kSeed)); }
TEST(TensorAutodiff, BackwardLinearity) { EXPECT_CHECK(verify::check_backward_linearity(kSeed)); }
TEST(TensorAutodiff, Determinism) { EXPECT_CHECK(verify::check_autodiff_determinism(kSeed)); }
TEST(TensorAutodiff, L2Normalize) { EXPECT_CHECK(verify::check_l2_normalize(kSeed)); }
TEST(TensorAutodiff, GradientSuite) { EXPECT_CHECK(verify::check_gradient_suite(5, 900, 1e-6)); }

TEST(TensorAutodiff, ProductRuleByHand) {
  Tape tape;
  Var x = tape.leaf(Tensor::vector({2.0, -3.0}));
  Var y = ops::sum(ops::mul(x, x));
  tape.backward(y);
  EXPECT_EQ(y.item(), 13.0);
  EXPECT_EQ(x.grad(), Tensor::vector({4.0, -6.0}));
}

TEST(TensorAutodiff, SoftmaxCeUniformLogits) {
  Tape tape;
  Var logits = tape.leaf(Tensor::vector({1.5, 1.5, 1.5, 1.5}));
  Var loss = ops::softmax_ce(logits, 2);
  tape.backward(loss);
  EXPECT_NEAR(loss.item(), std::log(4.0), 1e-15);
  const Tensor g = logits.grad();
  EXPECT_NEAR(g[0], 0.25, 1e-15);
  EXPECT_NEAR(g[2], -0.75, 1e-15);
}

TEST(TensorAutodiff, MatmulShapeMismatchThrows) {
  Tape tape;
  Var a = tape.leaf(Tensor(Shape{2, 3}));
  Var b = tape.leaf(Tensor(Shape{2, 3}));
  EXPECT_THROW(ops::matmul(a, b), ShapeError);
}

TEST(TensorAutodiff, FdCheckRejectsBadEps) {
  const ScalarFn f = [](Tape&, Var x) { return ops::sum(x); };
  EXPECT_THROW(fd_check(f, Tensor::vector({1.0}), 1e-2), Error);
}

TEST(TensorAutodiff, FdCheckCountsReluFlip) {
  const ScalarFn f = [](Tape&, Var x) { return ops::sum(ops::relu(x)); };
  EXPECT_GT(fd_check(f, Tensor::vector({1e-6, 0.5}), 1e-5).branch_flips, 0u);
  EXPECT_EQ(fd_check(f, Tensor::vector({0.3, 0.5}), 1e-5).branch_flips, 0u);
}

}  // namespace
}  // namespace ranknce
