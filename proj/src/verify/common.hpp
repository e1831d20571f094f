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

#include <sstream>
#include <string>
#include <vector>

#include "ranknce/rng.hpp"
#include "ranknce/tape.hpp"
#include "ranknce/tensor.hpp"
#include "ranknce/verify/checks.hpp"

namespace ranknce::verify::detail {

inline Tensor randn(Shape shape, Rng& rng, double stddev = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.normal(0.0, stddev);
  return t;
}

inline Tensor rand_unit_rows(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = randn(Shape{rows, cols}, rng);
  for (std::size_t r = 0; r < rows; ++r) {
    double n = 0.0;
    for (std::size_t c = 0; c < cols; ++c) n += t.at(r, c) * t.at(r, c);
    n = std::sqrt(n);
    for (std::size_t c = 0; c < cols; ++c) t.at(r, c) /= n;
  }
  return t;
}

inline std::vector<double> to_vector(const Tensor& t) {
  return {t.data().begin(), t.data().end()};
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline CheckResult result(std::string module, std::string invariant, bool passed,
                          double value, std::string detail) {
  return {std::move(module), std::move(invariant), passed, value, std::move(detail)};
}

template <typename... Args>
std::string str(const Args&... args) {
  std::ostringstream os;
  os.precision(6);
  (os << ... << args);
  return os.str();
}

}  // namespace ranknce::verify::detail
