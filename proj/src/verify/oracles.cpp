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

#include "ranknce/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ranknce/error.hpp"

namespace ranknce::verify {

Tensor naive_conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t cout = kernel.dim(0);
  Tensor out(Shape{cout, h, w});
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = bias[o];
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t kh = 0; kh < 3; ++kh)
            for (std::size_t kw = 0; kw < 3; ++kw) {
              const long yy = static_cast<long>(y) + static_cast<long>(kh) - 1;
              const long xx = static_cast<long>(x) + static_cast<long>(kw) - 1;
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) {
                continue;
              }
              acc += kernel[((o * cin + c) * 3 + kh) * 3 + kw] *
                     input.at(c, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
            }
        out[(o * h + y) * w + x] = acc;
      }
  return out;
}

Tensor naive_relu(const Tensor& t) {
  Tensor out = t;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor naive_similarity(const Tensor& fake, const Tensor& real) {
  const std::size_t s = fake.dim(0), c = fake.dim(1);
  Tensor out(Shape{s, s});
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < c; ++k) acc += fake.at(i, k) * real.at(j, k);
      out[i * s + j] = acc;
    }
  return out;
}

std::vector<std::size_t> sort_truncate_topk(std::span<const double> row,
                                            std::span<const std::uint8_t> eligible,
                                            std::size_t k) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < row.size(); ++j)
    if (eligible[j]) idx.push_back(j);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  if (idx.size() > k) idx.resize(k);
  return idx;
}

long double nce_extended(double positive, std::span<const double> negatives, double tau) {
  long double acc = 1.0L;
  for (double s : negatives) {
    acc += std::exp((static_cast<long double>(s) - positive) / tau);
  }
  return std::log(acc);
}

std::vector<long double> softmax_extended(double positive, std::span<const double> negatives,
                                          double tau) {
  std::vector<long double> e;
  e.push_back(std::exp(static_cast<long double>(positive) / tau));
  for (double s : negatives) e.push_back(std::exp(static_cast<long double>(s) / tau));
  const long double z = std::accumulate(e.begin(), e.end(), 0.0L);
  for (auto& v : e) v /= z;
  return e;
}

double neg_log_sigmoid(double z) {
  return z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

double gan_d_oracle(std::span<const double> real_logits, std::span<const double> fake_logits) {
  double r = 0.0, f = 0.0;
  for (double z : real_logits) r += neg_log_sigmoid(z);
  for (double z : fake_logits) f += neg_log_sigmoid(-z);
  return r / static_cast<double>(real_logits.size()) +
         f / static_cast<double>(fake_logits.size());
}

double gan_g_oracle(std::span<const double> fake_logits) {
  double f = 0.0;
  for (double z : fake_logits) f += neg_log_sigmoid(z);
  return f / static_cast<double>(fake_logits.size());
}

long double multisample_extended(const Tensor& pairing, double tau) {
  const std::size_t n = pairing.dim(0);
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    long double denom = 0.0L;
    for (std::size_t k = 0; k < n; ++k) denom += std::exp(pairing.at(k, i) / static_cast<long double>(tau));
    denom /= static_cast<long double>(n);
    total += std::log(std::exp(pairing.at(i, i) / static_cast<long double>(tau)) / denom);
  }
  return total / static_cast<long double>(n);
}

double kendall_tau_b(std::span<const double> a, std::span<const double> b) {
  long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) {
        ++ties_a;
      } else if (db == 0.0) {
        ++ties_b;
      } else if ((da > 0.0) == (db > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  const double n1 = static_cast<double>(concordant + discordant + ties_a);
  const double n2 = static_cast<double>(concordant + discordant + ties_b);
  if (n1 == 0.0 || n2 == 0.0) return 1.0;
  return static_cast<double>(concordant - discordant) / std::sqrt(n1 * n2);
}

namespace {

double distance(const Tensor& u, const Tensor& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.numel(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
  return std::sqrt(s);
}

}  // namespace

double mmd2_oracle(std::span<const Tensor> x, std::span<const Tensor> y) {
  std::vector<Tensor> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::vector<double> d;
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) d.push_back(distance(pooled[i], pooled[j]));
  std::sort(d.begin(), d.end());
  double sigma = d.size() % 2 ? d[d.size() / 2] : (d[d.size() / 2 - 1] + d[d.size() / 2]) / 2.0;
  if (sigma <= 0.0) sigma = 1.0;
  auto k = [&](const Tensor& u, const Tensor& v) {
    const double r = distance(u, v);
    return std::exp(-r * r / (2.0 * sigma * sigma));
  };
  const double m = static_cast<double>(x.size()), n = static_cast<double>(y.size());
  if (x.size() == y.size()) {
    double h = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j)
        if (i != j) h += k(x[i], x[j]) + k(y[i], y[j]) - k(x[i], y[j]) - k(x[j], y[i]);
    return h / (m * (m - 1.0));
  }
  double kxx = 0.0, kyy = 0.0, kxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (i != j) kxx += k(x[i], x[j]);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      if (i != j) kyy += k(y[i], y[j]);
  for (const auto& u : x)
    for (const auto& v : y) kxy += k(u, v);
  return kxx / (m * (m - 1.0)) + kyy / (n * (n - 1.0)) - 2.0 * kxy / (m * n);
}

double structure_oracle(const Tensor& source, const Tensor& translated) {
  const std::size_t c = source.dim(0), h = source.dim(1), w = source.dim(2);
  std::vector<double> a, b;
  const int dy[] = {-1, 1, 0, 0};
  const int dx[] = {0, 0, -1, 1};
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 1; y + 1 < h; ++y)
      for (std::size_t x = 1; x + 1 < w; ++x) {
        double la = -4.0 * source.at(ch, y, x), lb = -4.0 * translated.at(ch, y, x);
        for (int t = 0; t < 4; ++t) {
          la += source.at(ch, y + dy[t], x + dx[t]);
          lb += translated.at(ch, y + dy[t], x + dx[t]);
        }
        a.push_back(la);
        b.push_back(lb);
      }
  // Raw-moment form, independent of the centred two-pass implementation.
  long double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  const long double n = static_cast<long double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += static_cast<long double>(a[i]) * a[i];
    sbb += static_cast<long double>(b[i]) * b[i];
    sab += static_cast<long double>(a[i]) * b[i];
  }
  const long double cov = sab - sa * sb / n;
  const long double va = saa - sa * sa / n;
  const long double vb = sbb - sb * sb / n;
  return static_cast<double>(cov / std::sqrt(va * vb));
}

Tensor head_oracle(const Tensor& activation, std::span<const std::size_t> locations,
                   const Tensor& w1, const Tensor& b1, const Tensor& w2, const Tensor& b2,
                   bool normalize) {
  const std::size_t c = activation.dim(0);
  const std::size_t plane = activation.dim(1) * activation.dim(2);
  const std::size_t d = w1.dim(1);
  Tensor out(Shape{locations.size(), d});
  for (std::size_t s = 0; s < locations.size(); ++s) {
    std::vector<double> hidden(d);
    for (std::size_t j = 0; j < d; ++j) {
      double acc = b1[j];
      for (std::size_t ch = 0; ch < c; ++ch) acc += activation[ch * plane + locations[s]] * w1.at(ch, j);
      hidden[j] = std::max(acc, 0.0);
    }
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double acc = b2[j];
      for (std::size_t k = 0; k < d; ++k) acc += hidden[k] * w2.at(k, j);
      out[s * d + j] = acc;
      norm2 += acc * acc;
    }
    if (normalize) {
      const double norm = std::sqrt(norm2);
      for (std::size_t j = 0; j < d; ++j) out[s * d + j] /= norm;
    }
  }
  return out;
}

}  // namespace ranknce::verify
