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

#include "ranknce/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "ranknce/error.hpp"

namespace ranknce {
namespace {

double evaluate(const ScalarFn& f, const Tensor& x, std::uint64_t& signature) {
  Tape tape;
  const Var out = f(tape, tape.leaf(x));
  if (out.numel() != 1) throw ShapeError("fd_check: function is not scalar");
  const double v = out.item();
  if (!std::isfinite(v)) throw NumericError("fd_check: function value is not finite");
  signature = tape.branch_signature();
  return v;
}

}  // namespace

FdReport fd_check(const ScalarFn& f, const Tensor& x, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw Error("fd_check: eps " + std::to_string(eps) + " outside [1e-7, 1e-3]");
  }
  FdReport report;
  Tensor analytic;
  std::uint64_t base_signature = 0;
  {
    Tape tape;
    const Var in = tape.leaf(x);
    const Var out = f(tape, in);
    if (!std::isfinite(out.item())) {
      throw NumericError("fd_check: function value is not finite");
    }
    tape.backward(out);
    analytic = in.grad();
    report.kink_margin = tape.kink_margin();
    base_signature = tape.branch_signature();
  }
  Tensor probe = x;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double orig = probe[i];
    std::uint64_t sig_up = 0, sig_down = 0;
    probe[i] = orig + eps;
    const double up = evaluate(f, probe, sig_up);
    probe[i] = orig - eps;
    const double down = evaluate(f, probe, sig_down);
    std::uint64_t sig_up2 = 0, sig_down2 = 0;
    probe[i] = orig + 2.0 * eps;
    const double up2 = evaluate(f, probe, sig_up2);
    probe[i] = orig - 2.0 * eps;
    const double down2 = evaluate(f, probe, sig_down2);
    probe[i] = orig;
    report.branch_flips += (sig_up != base_signature) + (sig_down != base_signature);
    const double central = (up - down) / (2.0 * eps);
    const double third = (up2 - 2.0 * up + 2.0 * down - down2) / (2.0 * eps * eps * eps);
    report.truncation_estimate =
        std::max(report.truncation_estimate,
                 eps * eps * std::abs(third) / 6.0 / std::max(1.0, std::abs(central)));
    const double err =
        std::abs(analytic[i] - central) / std::max(1.0, std::abs(central));
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = i;
    }
  }
  return report;
}

}  // namespace ranknce
