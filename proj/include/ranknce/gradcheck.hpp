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
#include <functional>

#include "ranknce/tape.hpp"

namespace ranknce {

// Builds a scalar on `tape` from the leaf `x`.
using ScalarFn = std::function<Var(Tape& tape, Var x)>;

struct FdReport {
  // max_i |analytic_i - central_i| / max(1, |central_i|)
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  // Smallest distance to a non-differentiable point seen while evaluating f(x).
  double kink_margin = 0.0;
  // Perturbed evaluations whose branch signature differs from f(x); nonzero
  // means the stencil straddled a kink and the central difference is void.
  std::size_t branch_flips = 0;
  // max_i eps^2 |f'''_i| / 6 / max(1, |central_i|), with f''' taken from a
  // five-point stencil of forward values. Bounds the share of the error that
  // is central-difference truncation rather than a wrong gradient.
  double truncation_estimate = 0.0;
};

/// Compares reverse-mode gradients of `f` at `x` against central differences
/// with step `eps` (must lie in [1e-7, 1e-3]). Every coordinate is probed.
FdReport fd_check(const ScalarFn& f, const Tensor& x, double eps = 1e-5);

}  // namespace ranknce
