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

#include "ranknce/tape.hpp"

namespace ranknce::ops {

// Elementwise, shapes must match exactly.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var scale(Var a, double factor);
Var shift(Var a, double offset);

Var relu(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
// log(1 + e^x), evaluated without overflow.
Var softplus(Var a);

// [m,k] x [k,n] -> [m,n]
Var matmul(Var a, Var b);
Var transpose(Var a);
// Adds a length-n bias to every row of an [m,n] matrix.
Var add_row_bias(Var x, Var bias);

Var sum(Var a);
Var mean(Var a);

// -log softmax(logits)[target] over a 1-D logit vector.
Var softmax_ce(Var logits, std::size_t target);

// 3x3 cross-correlation, stride 1, zero padding 1.
// input [C_in,H,W], kernel [C_out,C_in,3,3], bias [C_out] -> [C_out,H,W]
Var conv2d(Var input, Var kernel, Var bias);

inline constexpr double kNormEpsilon = 1e-12;

Var l2_normalize(Var v, double eps = kNormEpsilon);
// Normalizes every row of an [m,n] matrix; a row with norm <= eps raises a
// NumericError naming the row (patch) index.
Var l2_normalize_rows(Var x, double eps = kNormEpsilon);

// Picks flat elements of `src` into a 1-D result.
Var gather(Var src, std::vector<std::size_t> flat_indices);
// Flattens and joins 1-D (or scalar) operands.
Var concat(std::span<const Var> parts);
Var reshape(Var a, Shape shape);
// Zeroes the diagonal of a square matrix. The diagonal is a structural zero:
// no gradient flows back through it.
Var mask_diagonal(Var a);

}  // namespace ranknce::ops
