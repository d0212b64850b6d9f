// Copyright 2026 The sslhar Authors.
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

#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "op_detail.hpp"
#include "sslhar/errors.hpp"
#include "sslhar/nn/ops.hpp"

namespace sslhar::nn {

using namespace detail;

namespace detail {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void require_rank(const Tensor& a, int rank, const char* op) {
  if (a.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     to_string(a.shape()));
  }
}

}  // namespace detail

namespace {

template <class Fwd, class Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  const auto& x = a.values();
  Buffer y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = fwd(x[i]);
  return make_result(a.shape(), std::move(y), {a}, [deriv](Node& self) {
    auto& g = pgrad(self, 0);
    const auto& xv = pval(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(xv[i], self.value[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Buffer y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.at(i) + b.at(i);
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!needs(self, p)) continue;
      auto& g = pgrad(self, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Buffer y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.at(i) - b.at(i);
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    if (needs(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (needs(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Buffer y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.at(i) * b.at(i);
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    const auto& av = pval(self, 0);
    const auto& bv = pval(self, 1);
    if (needs(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (needs(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor add_n(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("add_n: empty input");
  Buffer y(xs[0].values().begin(), xs[0].values().end());
  for (std::size_t k = 1; k < xs.size(); ++k) {
    require_same_shape(xs[0], xs[k], "add_n");
    const auto& v = xs[k].values();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += v[i];
  }
  return make_result(xs[0].shape(), std::move(y), xs, [](Node& self) {
    for (std::size_t p = 0; p < self.parents.size(); ++p) {
      if (!needs(self, p)) continue;
      auto& g = pgrad(self, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sum(const Tensor& a) {
  const auto& v = a.values();
  double s = std::accumulate(v.begin(), v.end(), 0.0);
  return make_result({1}, {s}, {a}, [](Node& self) {
    auto& g = pgrad(self, 0);
    for (double& x : g) x += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("mean of empty tensor");
  const double n = static_cast<double>(a.size());
  return scale(sum(a), 1.0 / n);
}

Tensor row_dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "row_dot");
  require_rank(a, 2, "row_dot");
  const int n = a.dim(0), d = a.dim(1);
  CMapR A(a.values().data(), n, d), B(b.values().data(), n, d);
  Buffer y(static_cast<std::size_t>(n));
  VecMap(y.data(), n) = A.cwiseProduct(B).rowwise().sum();
  return make_result({n}, std::move(y), {a, b}, [n, d](Node& self) {
    CVecMap G(self.grad.data(), n);
    if (needs(self, 0)) {
      MapR GA(pgrad(self, 0).data(), n, d);
      GA += G.asDiagonal() * CMapR(pval(self, 1).data(), n, d);
    }
    if (needs(self, 1)) {
      MapR GB(pgrad(self, 1).data(), n, d);
      GB += G.asDiagonal() * CMapR(pval(self, 0).data(), n, d);
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape));
  }
  Buffer y(a.values().begin(), a.values().end());
  return make_result(std::move(shape), std::move(y), {a}, [](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor permute(const Tensor& a, const std::vector<int>& perm) {
  const int r = a.rank();
  if (static_cast<int>(perm.size()) != r || r > 4) throw ShapeError("permute: bad permutation");
  std::array<int, 4> in_dims{1, 1, 1, 1}, out_dims{1, 1, 1, 1};
  std::array<std::size_t, 4> in_stride{0, 0, 0, 0};
  std::vector<bool> used(static_cast<std::size_t>(r), false);
  for (int i = 0; i < r; ++i) {
    if (perm[i] < 0 || perm[i] >= r || used[perm[i]]) throw ShapeError("permute: bad permutation");
    used[perm[i]] = true;
  }
  std::size_t stride = 1;
  std::array<std::size_t, 4> src_strides{};
  for (int i = r - 1; i >= 0; --i) {
    src_strides[i] = stride;
    stride *= static_cast<std::size_t>(a.dim(i));
  }
  Shape out_shape(r);
  for (int i = 0; i < r; ++i) {
    out_shape[i] = a.dim(perm[i]);
    out_dims[i] = out_shape[i];
    in_stride[i] = src_strides[perm[i]];
  }
  (void)in_dims;
  std::vector<std::size_t> index(a.size());
  std::size_t o = 0;
  for (int i0 = 0; i0 < out_dims[0]; ++i0)
    for (int i1 = 0; i1 < out_dims[1]; ++i1)
      for (int i2 = 0; i2 < out_dims[2]; ++i2)
        for (int i3 = 0; i3 < out_dims[3]; ++i3)
          index[o++] = i0 * in_stride[0] + i1 * in_stride[1] + i2 * in_stride[2] + i3 * in_stride[3];
  Buffer y(a.size());
  const auto& x = a.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[index[i]];
  return make_result(std::move(out_shape), std::move(y), {a}, [index = std::move(index)](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < index.size(); ++i) g[index[i]] += self.grad[i];
  });
}

Tensor slice_time(const Tensor& x, int start, int len) {
  require_rank(x, 3, "slice_time");
  const int B = x.dim(0), L = x.dim(1), C = x.dim(2);
  if (start < 0 || len < 0 || start + len > L) throw ShapeError("slice_time: range out of bounds");
  Buffer y(static_cast<std::size_t>(B) * len * C);
  const auto& xv = x.values();
  for (int b = 0; b < B; ++b) {
    std::copy_n(xv.begin() + (static_cast<std::size_t>(b) * L + start) * C,
                static_cast<std::size_t>(len) * C, y.begin() + static_cast<std::size_t>(b) * len * C);
  }
  return make_result({B, len, C}, std::move(y), {x}, [B, L, C, start, len](Node& self) {
    auto& g = pgrad(self, 0);
    for (int b = 0; b < B; ++b) {
      const std::size_t src = static_cast<std::size_t>(b) * len * C;
      const std::size_t dst = (static_cast<std::size_t>(b) * L + start) * C;
      for (std::size_t i = 0; i < static_cast<std::size_t>(len) * C; ++i) g[dst + i] += self.grad[src + i];
    }
  });
}

Tensor gather_time(const Tensor& x, const std::vector<int>& t) {
  require_rank(x, 3, "gather_time");
  const int B = x.dim(0), L = x.dim(1), C = x.dim(2);
  if (static_cast<int>(t.size()) != B) throw ShapeError("gather_time: one index per row required");
  Buffer y(static_cast<std::size_t>(B) * C);
  const auto& xv = x.values();
  for (int b = 0; b < B; ++b) {
    if (t[b] < 0 || t[b] >= L) throw ShapeError("gather_time: index out of range");
    std::copy_n(xv.begin() + (static_cast<std::size_t>(b) * L + t[b]) * C, C,
                y.begin() + static_cast<std::size_t>(b) * C);
  }
  return make_result({B, C}, std::move(y), {x}, [B, L, C, t](Node& self) {
    auto& g = pgrad(self, 0);
    for (int b = 0; b < B; ++b) {
      const std::size_t dst = (static_cast<std::size_t>(b) * L + t[b]) * C;
      for (int c = 0; c < C; ++c) g[dst + c] += self.grad[static_cast<std::size_t>(b) * C + c];
    }
  });
}

Tensor stack_time(const std::vector<Tensor>& steps) {
  if (steps.empty()) throw ShapeError("stack_time: no steps");
  require_rank(steps[0], 2, "stack_time");
  const int B = steps[0].dim(0), C = steps[0].dim(1), L = static_cast<int>(steps.size());
  Buffer y(static_cast<std::size_t>(B) * L * C);
  for (int t = 0; t < L; ++t) {
    require_same_shape(steps[0], steps[t], "stack_time");
    const auto& s = steps[t].values();
    for (int b = 0; b < B; ++b) {
      std::copy_n(s.begin() + static_cast<std::size_t>(b) * C, C,
                  y.begin() + (static_cast<std::size_t>(b) * L + t) * C);
    }
  }
  return make_result({B, L, C}, std::move(y), steps, [B, L, C](Node& self) {
    for (int t = 0; t < L; ++t) {
      if (!needs(self, t)) continue;
      auto& g = pgrad(self, t);
      for (int b = 0; b < B; ++b) {
        const std::size_t src = (static_cast<std::size_t>(b) * L + t) * C;
        for (int c = 0; c < C; ++c) g[static_cast<std::size_t>(b) * C + c] += self.grad[src + c];
      }
    }
  });
}

Tensor slice_cols(const Tensor& x, int start, int len) {
  require_rank(x, 2, "slice_cols");
  const int N = x.dim(0), C = x.dim(1);
  if (start < 0 || len < 0 || start + len > C) throw ShapeError("slice_cols: range out of bounds");
  Buffer y(static_cast<std::size_t>(N) * len);
  MapR(y.data(), N, len) = CMapR(x.values().data(), N, C).middleCols(start, len);
  return make_result({N, len}, std::move(y), {x}, [N, C, start, len](Node& self) {
    MapR(pgrad(self, 0).data(), N, C).middleCols(start, len) += CMapR(self.grad.data(), N, len);
  });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_rows");
  require_rank(b, 2, "concat_rows");
  if (a.dim(1) != b.dim(1)) throw ShapeError("concat_rows: column mismatch");
  Buffer y(a.values().begin(), a.values().end());
  y.insert(y.end(), b.values().begin(), b.values().end());
  const std::size_t na = a.size();
  return make_result({a.dim(0) + b.dim(0), a.dim(1)}, std::move(y), {a, b}, [na](Node& self) {
    if (needs(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < na; ++i) g[i] += self.grad[i];
    }
    if (needs(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[na + i];
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(w, 2, "linear");
  const int in = w.dim(0), out = w.dim(1);
  if (x.rank() < 1 || x.dim(-1) != in) {
    throw ShapeError("linear: input " + to_string(x.shape()) + " does not match weight " +
                     to_string(w.shape()));
  }
  if (b.defined() && (b.rank() != 1 || b.dim(0) != out)) throw ShapeError("linear: bad bias shape");
  const int n = static_cast<int>(x.size() / static_cast<std::size_t>(in));
  Shape shape = x.shape();
  shape.back() = out;
  Buffer y(static_cast<std::size_t>(n) * out);
  MapR Y(y.data(), n, out);
  Y.noalias() = CMapR(x.values().data(), n, in) * CMapR(w.values().data(), in, out);
  if (b.defined()) Y.rowwise() += CVecMap(b.values().data(), out).transpose();
  std::vector<Tensor> parents{x, w};
  if (b.defined()) parents.push_back(b);
  return make_result(std::move(shape), std::move(y), std::move(parents), [n, in, out](Node& self) {
    CMapR G(self.grad.data(), n, out);
    if (needs(self, 0)) {
      MapR(pgrad(self, 0).data(), n, in).noalias() += G * CMapR(pval(self, 1).data(), in, out).transpose();
    }
    if (needs(self, 1)) {
      MapR(pgrad(self, 1).data(), in, out).noalias() += CMapR(pval(self, 0).data(), n, in).transpose() * G;
    }
    if (self.parents.size() > 2 && needs(self, 2)) {
      VecMap(pgrad(self, 2).data(), out) += G.colwise().sum().transpose();
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const int n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) throw ShapeError("matmul: inner dimension mismatch");
  Buffer y(static_cast<std::size_t>(n) * m);
  MapR(y.data(), n, m).noalias() = CMapR(a.values().data(), n, k) * CMapR(b.values().data(), k, m);
  return make_result({n, m}, std::move(y), {a, b}, [n, k, m](Node& self) {
    CMapR G(self.grad.data(), n, m);
    if (needs(self, 0)) {
      MapR(pgrad(self, 0).data(), n, k).noalias() += G * CMapR(pval(self, 1).data(), k, m).transpose();
    }
    if (needs(self, 1)) {
      MapR(pgrad(self, 1).data(), k, m).noalias() += CMapR(pval(self, 0).data(), n, k).transpose() * G;
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul_nt");
  require_rank(b, 2, "matmul_nt");
  const int n = a.dim(0), k = a.dim(1), m = b.dim(0);
  if (b.dim(1) != k) throw ShapeError("matmul_nt: inner dimension mismatch");
  Buffer y(static_cast<std::size_t>(n) * m);
  MapR(y.data(), n, m).noalias() =
      CMapR(a.values().data(), n, k) * CMapR(b.values().data(), m, k).transpose();
  return make_result({n, m}, std::move(y), {a, b}, [n, k, m](Node& self) {
    CMapR G(self.grad.data(), n, m);
    if (needs(self, 0)) {
      MapR(pgrad(self, 0).data(), n, k).noalias() += G * CMapR(pval(self, 1).data(), m, k);
    }
    if (needs(self, 1)) {
      MapR(pgrad(self, 1).data(), m, k).noalias() += G.transpose() * CMapR(pval(self, 0).data(), n, k);
    }
  });
}

// ---- losses --------------------------------------------------------------

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                     const std::vector<std::uint8_t>& candidates) {
  require_rank(logits, 2, "cross_entropy");
  const int N = logits.dim(0), C = logits.dim(1);
  if (static_cast<int>(labels.size()) != N) throw ShapeError("cross_entropy: label count mismatch");
  if (!candidates.empty() && candidates.size() != logits.size()) {
    throw ShapeError("cross_entropy: candidate mask size mismatch");
  }
  if (N == 0) throw ShapeError("cross_entropy: empty batch");
  const auto& z = logits.values();
  auto valid = [&](std::size_t idx) { return candidates.empty() || candidates[idx] != 0; };
  Buffer prob(logits.size(), 0.0);
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * C;
    if (labels[i] < 0 || labels[i] >= C || !valid(row + labels[i])) {
      throw ShapeError("cross_entropy: label " + std::to_string(labels[i]) + " is not a candidate");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < C; ++c)
      if (valid(row + c)) mx = std::max(mx, z[row + c]);
    double se = 0.0;
    for (int c = 0; c < C; ++c) {
      if (!valid(row + c)) continue;
      prob[row + c] = std::exp(z[row + c] - mx);
      se += prob[row + c];
    }
    for (int c = 0; c < C; ++c) prob[row + c] /= se;
    total += (std::log(se) + mx) - z[row + labels[i]];
  }
  return make_result({1}, {total / N}, {logits},
                     [N, C, labels, prob = std::move(prob)](Node& self) {
                       auto& g = pgrad(self, 0);
                       const double s = self.grad[0] / N;
                       for (int i = 0; i < N; ++i) {
                         const std::size_t row = static_cast<std::size_t>(i) * C;
                         for (int c = 0; c < C; ++c) g[row + c] += s * prob[row + c];
                         g[row + labels[i]] -= s;
                       }
                     });
}

Tensor bce_with_logits(const Tensor& logits, const std::vector<double>& targets) {
  if (targets.size() != logits.size()) throw ShapeError("bce_with_logits: target size mismatch");
  if (logits.size() == 0) throw ShapeError("bce_with_logits: empty input");
  const auto& x = logits.values();
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += std::max(x[i], 0.0) - x[i] * targets[i] + std::log1p(std::exp(-std::abs(x[i])));
  }
  const double n = static_cast<double>(x.size());
  return make_result({1}, {total / n}, {logits}, [targets, n](Node& self) {
    auto& g = pgrad(self, 0);
    const auto& xv = pval(self, 0);
    const double s = self.grad[0] / n;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * (1.0 / (1.0 + std::exp(-xv[i])) - targets[i]);
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  if (a.size() == 0) throw ShapeError("mse: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.at(i) - b.at(i);
    total += d * d;
  }
  const double n = static_cast<double>(a.size());
  return make_result({1}, {total / n}, {a, b}, [n](Node& self) {
    const auto& av = pval(self, 0);
    const auto& bv = pval(self, 1);
    const double s = 2.0 * self.grad[0] / n;
    if (needs(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * (av[i] - bv[i]);
    }
    if (needs(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= s * (av[i] - bv[i]);
    }
  });
}

Tensor masked_mse(const Tensor& pred, const Tensor& target, const std::vector<std::uint8_t>& mask) {
  require_same_shape(pred, target, "masked_mse");
  require_rank(pred, 3, "masked_mse");
  const int B = pred.dim(0), L = pred.dim(1), C = pred.dim(2);
  if (mask.size() != static_cast<std::size_t>(B) * L) throw ShapeError("masked_mse: mask size mismatch");
  std::size_t steps = 0;
  double total = 0.0;
  for (std::size_t s = 0; s < mask.size(); ++s) {
    if (!mask[s]) continue;
    ++steps;
    for (int c = 0; c < C; ++c) {
      const double d = pred.at(s * C + c) - target.at(s * C + c);
      total += d * d;
    }
  }
  if (steps == 0) throw ValidationError("masked_mse: empty mask");
  const double n = static_cast<double>(steps) * C;
  return make_result({1}, {total / n}, {pred, target}, [mask, C, n](Node& self) {
    const auto& av = pval(self, 0);
    const auto& bv = pval(self, 1);
    const double s = 2.0 * self.grad[0] / n;
    for (std::size_t p = 0; p < 2; ++p) {
      if (!needs(self, p)) continue;
      auto& g = pgrad(self, p);
      const double sign = p == 0 ? 1.0 : -1.0;
      for (std::size_t st = 0; st < mask.size(); ++st) {
        if (!mask[st]) continue;
        for (int c = 0; c < C; ++c) {
          const std::size_t i = st * C + c;
          g[i] += sign * s * (av[i] - bv[i]);
        }
      }
    }
  });
}

}  // namespace sslhar::nn
