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

#include "ranknce/toy/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ranknce/error.hpp"

namespace ranknce::toy {
namespace {

double squared_distance(const Tensor& u, const Tensor& v) {
  if (u.numel() != v.numel()) throw ShapeError("mmd: sample sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < u.numel(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return s;
}

void require_nonempty(std::span<const Tensor> a, std::span<const Tensor> b) {
  if (a.empty() || b.empty()) throw ShapeError("mmd: empty sample set");
}

struct KernelSums {
  double xx = 0.0, yy = 0.0, xy_all = 0.0, xy_offdiag = 0.0;
};

KernelSums kernel_sums(std::span<const Tensor> x, std::span<const Tensor> y,
                       double sigma) {
  const double denom = 2.0 * sigma * sigma;
  auto k = [&](const Tensor& u, const Tensor& v) {
    return std::exp(-squared_distance(u, v) / denom);
  };
  KernelSums s;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (i != j) s.xx += k(x[i], x[j]);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      if (i != j) s.yy += k(y[i], y[j]);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double v = k(x[i], y[j]);
      s.xy_all += v;
      if (i != j) s.xy_offdiag += v;
    }
  return s;
}

}  // namespace

double median_bandwidth(std::span<const Tensor> a, std::span<const Tensor> b) {
  std::vector<const Tensor*> pooled;
  for (const auto& t : a) pooled.push_back(&t);
  for (const auto& t : b) pooled.push_back(&t);
  std::vector<double> dists;
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = i + 1; j < pooled.size(); ++j)
      dists.push_back(std::sqrt(squared_distance(*pooled[i], *pooled[j])));
  if (dists.empty()) return 1.0;
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  const double med = m % 2 ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  return med > 0.0 ? med : 1.0;
}

double mmd2_unbiased(std::span<const Tensor> x, std::span<const Tensor> y) {
  require_nonempty(x, y);
  if (x.size() < 2 || y.size() < 2) {
    throw ShapeError("mmd: unbiased estimate needs at least two samples per set");
  }
  const double sigma = median_bandwidth(x, y);
  const KernelSums s = kernel_sums(x, y, sigma);
  const double m = static_cast<double>(x.size());
  const double n = static_cast<double>(y.size());
  if (x.size() == y.size()) {
    return (s.xx + s.yy - 2.0 * s.xy_offdiag) / (m * (m - 1.0));
  }
  return s.xx / (m * (m - 1.0)) + s.yy / (n * (n - 1.0)) - 2.0 * s.xy_all / (m * n);
}

double mmd2_biased(std::span<const Tensor> x, std::span<const Tensor> y) {
  require_nonempty(x, y);
  const double sigma = median_bandwidth(x, y);
  const KernelSums s = kernel_sums(x, y, sigma);
  const double m = static_cast<double>(x.size());
  const double n = static_cast<double>(y.size());
  // diagonal kernel terms are exp(0) = 1
  return (s.xx + m) / (m * m) + (s.yy + n) / (n * n) - 2.0 * s.xy_all / (m * n);
}

double mmd_metric(std::span<const Tensor> generated, std::span<const Tensor> target) {
  return std::max(0.0, mmd2_unbiased(generated, target));
}

namespace {

std::vector<double> laplacian_interior(const Tensor& img) {
  if (img.rank() != 3 || img.dim(1) < 3 || img.dim(2) < 3) {
    throw ShapeError("structure_score: image must be [C,H,W] with H,W >= 3");
  }
  const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  std::vector<double> out;
  out.reserve(c * (h - 2) * (w - 2));
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 1; y + 1 < h; ++y)
      for (std::size_t x = 1; x + 1 < w; ++x)
        out.push_back(img.at(ch, y - 1, x) + img.at(ch, y + 1, x) +
                      img.at(ch, y, x - 1) + img.at(ch, y, x + 1) -
                      4.0 * img.at(ch, y, x));
  return out;
}

}  // namespace

double structure_score(const Tensor& source, const Tensor& translated) {
  if (source.shape() != translated.shape()) {
    throw ShapeError("structure_score: image extents differ");
  }
  const auto a = laplacian_interior(source);
  const auto b = laplacian_interior(translated);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    throw NumericError("structure_score: zero-variance high-pass response");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace ranknce::toy
