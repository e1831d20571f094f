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

#include "ranknce/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <string>

#include "ranknce/error.hpp"

namespace ranknce::ops {
namespace {

Tape& same_tape(Var a, Var b) {
  Tape& t = a.tape();
  if (&t != &b.tape()) throw Error("operands recorded on different tapes");
  return t;
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_rank(const char* op, Var a, std::size_t rank) {
  if (a.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + ", got " +
                     shape_string(a.shape()));
  }
}

// Elementwise unary op with derivative expressed through input and output.
template <typename Fwd, typename Deriv>
Var unary(const char* name, Var a, Fwd fwd, Deriv deriv) {
  Tape& t = a.tape();
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] = fwd(x[i]);
  const NodeId in = a.id();
  return t.record(name, std::move(y), {in}, [in, deriv](Tape& tp, NodeId self) {
    const Tensor& xv = tp.value(in);
    const Tensor& yv = tp.value(self);
    auto g = tp.grad_buffer(self);
    std::vector<double> d(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i] * deriv(xv[i], yv[i]);
    tp.accumulate(in, d);
  });
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape("add", a, b);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] += bv[i];
  const NodeId ia = a.id(), ib = b.id();
  return t.record("add", std::move(y), {ia, ib}, [ia, ib](Tape& tp, NodeId self) {
    auto g = tp.grad_buffer(self);
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape("sub", a, b);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] -= bv[i];
  const NodeId ia = a.id(), ib = b.id();
  return t.record("sub", std::move(y), {ia, ib}, [ia, ib](Tape& tp, NodeId self) {
    auto g = tp.grad_buffer(self);
    tp.accumulate(ia, g);
    std::vector<double> neg(g.begin(), g.end());
    for (double& v : neg) v = -v;
    tp.accumulate(ib, neg);
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape("mul", a, b);
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] *= bv[i];
  const NodeId ia = a.id(), ib = b.id();
  return t.record("mul", std::move(y), {ia, ib}, [ia, ib](Tape& tp, NodeId self) {
    auto g = tp.grad_buffer(self);
    const Tensor& av = tp.value(ia);
    const Tensor& bv = tp.value(ib);
    std::vector<double> da(g.size()), db(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      da[i] = g[i] * bv[i];
      db[i] = g[i] * av[i];
    }
    tp.accumulate(ia, da);
    tp.accumulate(ib, db);
  });
}

Var scale(Var a, double factor) {
  return unary("scale", a, [factor](double x) { return x * factor; },
               [factor](double, double) { return factor; });
}

Var shift(Var a, double offset) {
  return unary("shift", a, [offset](double x) { return x + offset; },
               [](double, double) { return 1.0; });
}

Var relu(Var a) {
  double margin = std::numeric_limits<double>::infinity();
  std::uint64_t bits = 0;
  std::size_t n = 0;
  for (double v : a.value().data()) {
    margin = std::min(margin, std::abs(v));
    bits = bits << 1 | (v > 0.0 ? 1 : 0);
    if (++n % 64 == 0) a.tape().note_branch(std::exchange(bits, 0));
  }
  a.tape().note_branch(bits);
  a.tape().note_kink(margin);
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary("exp", a, [](double x) { return std::exp(x); },
               [](double, double y) { return y; });
}

Var log(Var a) {
  for (double v : a.value().data()) {
    if (!(v > 0.0)) throw NumericError("log of non-positive value");
  }
  return unary("log", a, [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Var softplus(Var a) {
  return unary(
      "softplus", a,
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) {
        // logistic sigmoid, branch keeps exp() argument non-positive
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  if (bv.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions differ " +
                     shape_string(av.shape()) + " x " +
                     shape_string(bv.shape()));
  }
  Tensor y(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av.at(i, p);
      for (std::size_t j = 0; j < n; ++j) y.at(i, j) += aip * bv.at(p, j);
    }
  }
  const NodeId ia = a.id(), ib = b.id();
  return t.record("matmul", std::move(y), {ia, ib},
                  [ia, ib, m, k, n](Tape& tp, NodeId self) {
    auto g = tp.grad_buffer(self);
    const Tensor& av = tp.value(ia);
    const Tensor& bv = tp.value(ib);
    if (tp.requires_grad(ia)) {
      std::vector<double> da(m * k, 0.0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * bv.at(p, j);
          da[i * k + p] = s;
        }
      tp.accumulate(ia, da);
    }
    if (tp.requires_grad(ib)) {
      std::vector<double> db(k * n, 0.0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av.at(i, p);
          for (std::size_t j = 0; j < n; ++j) db[p * n + j] += aip * g[i * n + j];
        }
      tp.accumulate(ib, db);
    }
  });
}

Var transpose(Var a) {
  require_rank("transpose", a, 2);
  const Tensor& av = a.value();
  const std::size_t m = av.dim(0), n = av.dim(1);
  Tensor y(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y.at(j, i) = av.at(i, j);
  const NodeId ia = a.id();
  return a.tape().record("transpose", std::move(y), {ia},
                         [ia, m, n](Tape& tp, NodeId self) {
    auto g = tp.grad_buffer(self);
    std::vector<double> d(m * n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] = g[j * m + i];
    tp.accumulate(ia, d);
  });
}

Var add_row_bias(Var x, Var bias) {
  Tape& t = same_tape(x, bias);
  require_rank("add_row_bias", x, 2);
  const std::size_t m = x.value().dim(0), n = x.value().dim(1);
  if (bias.numel() != n) {
    throw ShapeError("add_row_bias: bias " + shape_string(bias.shape()) +
                     " does not match row width of " + shape_string(x.shape()));
  }
  Tensor y = x.value();
  const Tensor& bv = bias.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y.at(i, j) += bv[j];
  const NodeId ix = x.id(), ib = bias.id();
  return t.record("add_row_bias", std::move(y), {ix, ib},
                  [ix, ib, m, n](Tape& tp, NodeId self) {
    auto g = tp.grad_buffer(self);
    tp.accumulate(ix, g);
    std::vector<double> db(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) db[j] += g[i * n + j];
    tp.accumulate(ib, db);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const NodeId ia = a.id();
  const std::size_t n = a.numel();
  return a.tape().record("sum", Tensor::scalar(s), {ia}, [ia, n](Tape& tp, NodeId self) {
    const double g = tp.grad_buffer(self)[0];
    tp.accumulate(ia, std::vector<double>(n, g));
  });
}

Var mean(Var a) {
  const std::size_t n = a.numel();
  if (n == 0) throw ShapeError("mean of empty tensor");
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const NodeId ia = a.id();
  return a.tape().record("mean", Tensor::scalar(s / static_cast<double>(n)), {ia},
                         [ia, n](Tape& tp, NodeId self) {
    const double g = tp.grad_buffer(self)[0] / static_cast<double>(n);
    tp.accumulate(ia, std::vector<double>(n, g));
  });
}

Var softmax_ce(Var logits, std::size_t target) {
  const Tensor& z = logits.value();
  const std::size_t n = z.numel();
  if (n == 0) throw ShapeError("softmax_ce: empty logits");
  if (target >= n) throw ShapeError("softmax_ce: target out of range");
  const double zmax = *std::max_element(z.data().begin(), z.data().end());
  double acc = 0.0;
  for (double v : z.data()) acc += std::exp(v - zmax);
  const double lse = zmax + std::log(acc);
  const NodeId in = logits.id();
  return logits.tape().record(
      "softmax_ce", Tensor::scalar(lse - z[target]), {in},
      [in, n, target, lse](Tape& tp, NodeId self) {
        const double g = tp.grad_buffer(self)[0];
        const Tensor& zv = tp.value(in);
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) {
          d[i] = g * (std::exp(zv[i] - lse) - (i == target ? 1.0 : 0.0));
        }
        tp.accumulate(in, d);
      });
}

Var conv2d(Var input, Var kernel, Var bias) {
  Tape& t = same_tape(input, kernel);
  same_tape(input, bias);
  require_rank("conv2d", input, 3);
  require_rank("conv2d", kernel, 4);
  const Tensor& x = input.value();
  const Tensor& w = kernel.value();
  const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t cout = w.dim(0);
  if (w.dim(1) != cin) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(w.dim(1)) +
                     " input channels, input has " + std::to_string(cin));
  }
  if (w.dim(2) != 3 || w.dim(3) != 3) throw ShapeError("conv2d: kernel must be 3x3");
  if (bias.numel() != cout) throw ShapeError("conv2d: bias length mismatch");

  // Output row range [lo, hi) for which tap offset d in {0,1,2} stays inside.
  auto range = [](std::size_t d, std::size_t n) {
    const std::size_t lo = d == 0 ? 1 : 0;
    const std::size_t hi = d == 2 ? n - 1 : n;
    return std::pair{lo, hi};
  };

  Tensor y(Shape{cout, h, wd});
  const Tensor& b = bias.value();
  for (std::size_t o = 0; o < cout; ++o) {
    double* yo = &y[o * h * wd];
    std::fill(yo, yo + h * wd, b[o]);
    for (std::size_t c = 0; c < cin; ++c) {
      const double* xc = x.data().data() + c * h * wd;
      for (std::size_t kh = 0; kh < 3; ++kh) {
        const auto [r0, r1] = range(kh, h);
        for (std::size_t kw = 0; kw < 3; ++kw) {
          const auto [c0, c1] = range(kw, wd);
          const double wv = w[((o * cin + c) * 3 + kh) * 3 + kw];
          for (std::size_t r = r0; r < r1; ++r) {
            const double* xr = xc + (r + kh - 1) * wd - 1 + kw;
            double* yr = yo + r * wd;
            for (std::size_t col = c0; col < c1; ++col) yr[col] += wv * xr[col];
          }
        }
      }
    }
  }

  const NodeId ix = input.id(), iw = kernel.id(), ib = bias.id();
  return t.record("conv2d", std::move(y), {ix, iw, ib},
                  [=](Tape& tp, NodeId self) {
    auto g = tp.grad_buffer(self);
    const Tensor& xv = tp.value(ix);
    const Tensor& wv = tp.value(iw);
    const bool need_x = tp.requires_grad(ix);
    const bool need_w = tp.requires_grad(iw);
    std::vector<double> dx(need_x ? xv.numel() : 0, 0.0);
    std::vector<double> dw(need_w ? wv.numel() : 0, 0.0);
    std::vector<double> db(cout, 0.0);
    for (std::size_t o = 0; o < cout; ++o) {
      const double* go = g.data() + o * h * wd;
      for (std::size_t i = 0; i < h * wd; ++i) db[o] += go[i];
      for (std::size_t c = 0; c < cin; ++c) {
        const double* xc = xv.data().data() + c * h * wd;
        for (std::size_t kh = 0; kh < 3; ++kh) {
          const auto [r0, r1] = range(kh, h);
          for (std::size_t kw = 0; kw < 3; ++kw) {
            const auto [c0, c1] = range(kw, wd);
            const std::size_t widx = ((o * cin + c) * 3 + kh) * 3 + kw;
            const double wval = wv[widx];
            double acc = 0.0;
            for (std::size_t r = r0; r < r1; ++r) {
              const std::size_t off = (r + kh - 1) * wd - 1 + kw;
              const double* gr = go + r * wd;
              if (need_x) {
                double* dxr = dx.data() + c * h * wd + off;
                for (std::size_t col = c0; col < c1; ++col) dxr[col] += wval * gr[col];
              }
              if (need_w) {
                const double* xr = xc + off;
                for (std::size_t col = c0; col < c1; ++col) acc += gr[col] * xr[col];
              }
            }
            if (need_w) dw[widx] += acc;
          }
        }
      }
    }
    if (need_x) tp.accumulate(ix, dx);
    if (need_w) tp.accumulate(iw, dw);
    tp.accumulate(ib, db);
  });
}

Var l2_normalize(Var v, double eps) {
  require_rank("l2_normalize", v, 1);
  const std::size_t c = v.numel();
  return reshape(l2_normalize_rows(reshape(v, Shape{1, c}), eps), Shape{c});
}

Var l2_normalize_rows(Var x, double eps) {
  require_rank("l2_normalize_rows", x, 2);
  const Tensor& xv = x.value();
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  Tensor y(xv.shape());
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) ss += xv.at(i, j) * xv.at(i, j);
    const double nrm = std::sqrt(ss);
    if (!(nrm > eps)) {
      throw NumericError("l2_normalize: near-zero feature norm at patch index " +
                         std::to_string(i));
    }
    norms[i] = nrm;
    for (std::size_t j = 0; j < n; ++j) y.at(i, j) = xv.at(i, j) / nrm;
  }
  const NodeId ix = x.id();
  return x.tape().record("l2_normalize_rows", std::move(y), {ix},
                         [ix, m, n, norms = std::move(norms)](Tape& tp, NodeId self) {
    auto g = tp.grad_buffer(self);
    const Tensor& yv = tp.value(self);
    std::vector<double> d(m * n);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += yv.at(i, j) * g[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        d[i * n + j] = (g[i * n + j] - yv.at(i, j) * dot) / norms[i];
      }
    }
    tp.accumulate(ix, d);
  });
}

Var gather(Var src, std::vector<std::size_t> flat_indices) {
  const Tensor& s = src.value();
  Tensor y(Shape{flat_indices.size()});
  for (std::size_t k = 0; k < flat_indices.size(); ++k) {
    if (flat_indices[k] >= s.numel()) {
      throw ShapeError("gather: index " + std::to_string(flat_indices[k]) +
                       " out of range for " + shape_string(s.shape()));
    }
    y[k] = s[flat_indices[k]];
  }
  const NodeId is = src.id();
  const std::size_t n = s.numel();
  return src.tape().record("gather", std::move(y), {is},
                           [is, n, idx = std::move(flat_indices)](Tape& tp, NodeId self) {
    auto g = tp.grad_buffer(self);
    std::vector<double> d(n, 0.0);
    for (std::size_t k = 0; k < idx.size(); ++k) d[idx[k]] += g[k];
    tp.accumulate(is, d);
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Tape& t = parts.front().tape();
  std::vector<double> out;
  std::vector<NodeId> ids;
  std::vector<std::size_t> sizes;
  for (const Var& p : parts) {
    if (&p.tape() != &t) throw Error("concat: operands on different tapes");
    if (p.value().rank() > 1) {
      throw ShapeError("concat: operand of shape " + shape_string(p.shape()) +
                       " is not 1-D");
    }
    const auto d = p.value().data();
    out.insert(out.end(), d.begin(), d.end());
    ids.push_back(p.id());
    sizes.push_back(d.size());
  }
  const std::size_t total = out.size();
  return t.record("concat", Tensor(Shape{total}, std::move(out)), ids,
                  [ids, sizes](Tape& tp, NodeId self) {
    auto g = tp.grad_buffer(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      tp.accumulate(ids[k], g.subspan(off, sizes[k]));
      off += sizes[k];
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tensor y = a.value().reshaped(std::move(shape));
  const NodeId ia = a.id();
  return a.tape().record("reshape", std::move(y), {ia}, [ia](Tape& tp, NodeId self) {
    tp.accumulate(ia, tp.grad_buffer(self));
  });
}

Var mask_diagonal(Var a) {
  require_rank("mask_diagonal", a, 2);
  const std::size_t n = a.value().dim(0);
  if (a.value().dim(1) != n) {
    throw ShapeError("mask_diagonal: matrix is not square " +
                     shape_string(a.shape()));
  }
  Tensor y = a.value();
  for (std::size_t i = 0; i < n; ++i) y.at(i, i) = 0.0;
  const NodeId ia = a.id();
  return a.tape().record("mask_diagonal", std::move(y), {ia},
                         [ia, n](Tape& tp, NodeId self) {
    auto g = tp.grad_buffer(self);
    std::vector<double> d(g.begin(), g.end());
    for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
    tp.accumulate(ia, d);
  });
}

}  // namespace ranknce::ops
