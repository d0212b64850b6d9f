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

#include <cmath>
#include <limits>

#include "op_detail.hpp"
#include "sslhar/errors.hpp"
#include "sslhar/nn/ops.hpp"

namespace sslhar::nn {

using namespace detail;

Tensor pad_time(const Tensor& x, int left, int right, PadMode mode) {
  require_rank(x, 3, "pad_time");
  const int B = x.dim(0), L = x.dim(1), C = x.dim(2);
  if (left < 0 || right < 0) throw ShapeError("pad_time: negative padding");
  if (mode == PadMode::reflect && (left >= L || right >= L)) {
    throw ShapeError("pad_time: reflect padding must be shorter than the sequence");
  }
  const int Lp = L + left + right;
  std::vector<int> src(static_cast<std::size_t>(Lp));
  for (int p = 0; p < Lp; ++p) {
    int s = p - left;
    if (s < 0 || s >= L) {
      if (mode == PadMode::zero) {
        s = -1;
      } else {
        s = s < 0 ? -s : 2 * (L - 1) - s;
      }
    }
    src[p] = s;
  }
  Buffer y(static_cast<std::size_t>(B) * Lp * C, 0.0);
  const auto& xv = x.values();
  for (int b = 0; b < B; ++b)
    for (int p = 0; p < Lp; ++p) {
      if (src[p] < 0) continue;
      std::copy_n(xv.begin() + (static_cast<std::size_t>(b) * L + src[p]) * C, C,
                  y.begin() + (static_cast<std::size_t>(b) * Lp + p) * C);
    }
  return make_result({B, Lp, C}, std::move(y), {x}, [B, L, Lp, C, src](Node& self) {
    auto& g = pgrad(self, 0);
    for (int b = 0; b < B; ++b)
      for (int p = 0; p < Lp; ++p) {
        if (src[p] < 0) continue;
        const std::size_t from = (static_cast<std::size_t>(b) * Lp + p) * C;
        const std::size_t to = (static_cast<std::size_t>(b) * L + src[p]) * C;
        for (int c = 0; c < C; ++c) g[to + c] += self.grad[from + c];
      }
  });
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 3, "conv1d");
  require_rank(w, 2, "conv1d");
  const int B = x.dim(0), L = x.dim(1), Ci = x.dim(2), Co = w.dim(1);
  if (w.dim(0) % Ci != 0) {
    throw ShapeError("conv1d: weight " + to_string(w.shape()) + " incompatible with " +
                     std::to_string(Ci) + " input channels");
  }
  const int K = w.dim(0) / Ci;
  const int Lo = L - K + 1;
  if (Lo < 1) {
    throw ShapeError("conv1d: sequence length " + std::to_string(L) + " shorter than kernel " +
                     std::to_string(K));
  }
  if (b.defined() && (b.rank() != 1 || b.dim(0) != Co)) throw ShapeError("conv1d: bad bias shape");
  using Strided = Eigen::Map<const MatR, 0, Eigen::OuterStride<>>;
  const int KC = K * Ci;
  Buffer y(static_cast<std::size_t>(B) * Lo * Co);
  CMapR W(w.values().data(), KC, Co);
  for (int bi = 0; bi < B; ++bi) {
    // Row t of the sliding view is x[t : t + K, :] flattened, which is
    // contiguous in time-major storage.
    Strided cols(x.values().data() + static_cast<std::size_t>(bi) * L * Ci, Lo, KC,
                 Eigen::OuterStride<>(Ci));
    MapR Y(y.data() + static_cast<std::size_t>(bi) * Lo * Co, Lo, Co);
    Y.noalias() = cols * W;
    if (b.defined()) Y.rowwise() += CVecMap(b.values().data(), Co).transpose();
  }
  std::vector<Tensor> parents{x, w};
  if (b.defined()) parents.push_back(b);
  return make_result({B, Lo, Co}, std::move(y), std::move(parents), [=](Node& self) {
    CMapR Wm(pval(self, 1).data(), KC, Co);
    const double* xv = pval(self, 0).data();
    MatR dcol;
    for (int bi = 0; bi < B; ++bi) {
      CMapR G(self.grad.data() + static_cast<std::size_t>(bi) * Lo * Co, Lo, Co);
      if (needs(self, 1)) {
        Strided cols(xv + static_cast<std::size_t>(bi) * L * Ci, Lo, KC, Eigen::OuterStride<>(Ci));
        MapR(pgrad(self, 1).data(), KC, Co).noalias() += cols.transpose() * G;
      }
      if (needs(self, 0)) {
        dcol.noalias() = G * Wm.transpose();
        double* gx = pgrad(self, 0).data() + static_cast<std::size_t>(bi) * L * Ci;
        for (int t = 0; t < Lo; ++t) {
          Eigen::Map<Eigen::VectorXd>(gx + static_cast<std::size_t>(t) * Ci, KC) += dcol.row(t).transpose();
        }
      }
      if (self.parents.size() > 2 && needs(self, 2)) {
        VecMap(pgrad(self, 2).data(), Co) += G.colwise().sum().transpose();
      }
    }
  });
}

Tensor max_over_time(const Tensor& x) {
  require_rank(x, 3, "max_over_time");
  const int B = x.dim(0), L = x.dim(1), C = x.dim(2);
  if (L < 1) throw ShapeError("max_over_time: empty sequence");
  Buffer y(static_cast<std::size_t>(B) * C);
  std::vector<int> arg(y.size(), 0);
  const auto& xv = x.values();
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const std::size_t o = static_cast<std::size_t>(b) * C + c;
      double best = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < L; ++t) {
        const double v = xv[(static_cast<std::size_t>(b) * L + t) * C + c];
        if (v > best) {
          best = v;
          arg[o] = t;
        }
      }
      y[o] = best;
    }
  return make_result({B, C}, std::move(y), {x}, [B, L, C, arg = std::move(arg)](Node& self) {
    auto& g = pgrad(self, 0);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const std::size_t o = static_cast<std::size_t>(b) * C + c;
        g[(static_cast<std::size_t>(b) * L + arg[o]) * C + c] += self.grad[o];
      }
  });
}

Tensor mean_over_time(const Tensor& x) {
  require_rank(x, 3, "mean_over_time");
  const int B = x.dim(0), L = x.dim(1), C = x.dim(2);
  if (L < 1) throw ShapeError("mean_over_time: empty sequence");
  Buffer y(static_cast<std::size_t>(B) * C, 0.0);
  const auto& xv = x.values();
  for (int b = 0; b < B; ++b)
    for (int t = 0; t < L; ++t)
      for (int c = 0; c < C; ++c) y[static_cast<std::size_t>(b) * C + c] += xv[(static_cast<std::size_t>(b) * L + t) * C + c] / L;
  return make_result({B, C}, std::move(y), {x}, [B, L, C](Node& self) {
    auto& g = pgrad(self, 0);
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < L; ++t)
        for (int c = 0; c < C; ++c)
          g[(static_cast<std::size_t>(b) * L + t) * C + c] += self.grad[static_cast<std::size_t>(b) * C + c] / L;
  });
}

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
  if (!training || p <= 0.0) return x;
  if (p >= 1.0) return scale(x, 0.0);
  const double keep = 1.0 / (1.0 - p);
  Buffer m(x.size());
  for (double& v : m) v = rng.uniform() < p ? 0.0 : keep;
  Buffer y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x.at(i) * m[i];
  return make_result(x.shape(), std::move(y), {x}, [m = std::move(m)](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * m[i];
  });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, bool training, double momentum, double eps) {
  require_rank(x, 2, "batch_norm");
  const int N = x.dim(0), C = x.dim(1);
  if (gamma.size() != static_cast<std::size_t>(C) || beta.size() != static_cast<std::size_t>(C) ||
      running_mean.size() != static_cast<std::size_t>(C) || running_var.size() != static_cast<std::size_t>(C)) {
    throw ShapeError("batch_norm: parameter size mismatch");
  }
  CMapR X(x.values().data(), N, C);
  Eigen::RowVectorXd mu(C), var(C);
  if (training) {
    if (N < 1) throw ShapeError("batch_norm: empty batch");
    mu = X.colwise().mean();
    var = (X.rowwise() - mu).array().square().colwise().mean();
    auto rm = running_mean.values();
    auto rv = running_var.values();
    const double unbias = N > 1 ? static_cast<double>(N) / (N - 1) : 1.0;
    for (int c = 0; c < C; ++c) {
      rm[c] = (1.0 - momentum) * rm[c] + momentum * mu[c];
      rv[c] = (1.0 - momentum) * rv[c] + momentum * var[c] * unbias;
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mu[c] = running_mean.at(c);
      var[c] = running_var.at(c);
    }
  }
  Eigen::RowVectorXd inv = (var.array() + eps).rsqrt();
  MatR xhat = (X.rowwise() - mu).array().rowwise() * inv.array();
  Buffer y(x.size());
  MapR(y.data(), N, C) = (xhat.array().rowwise() * CVecMap(gamma.values().data(), C).transpose().array())
                             .rowwise() +
                         CVecMap(beta.values().data(), C).transpose().array();
  return make_result({N, C}, std::move(y), {x, gamma, beta},
                     [N, C, training, inv, xhat = std::move(xhat)](Node& self) {
                       CMapR G(self.grad.data(), N, C);
                       Eigen::RowVectorXd gsum = G.colwise().sum();
                       Eigen::RowVectorXd gxs = G.cwiseProduct(xhat).colwise().sum();
                       if (needs(self, 1)) VecMap(pgrad(self, 1).data(), C) += gxs.transpose();
                       if (needs(self, 2)) VecMap(pgrad(self, 2).data(), C) += gsum.transpose();
                       if (!needs(self, 0)) return;
                       Eigen::RowVectorXd gamma = CVecMap(pval(self, 1).data(), C).transpose();
                       MapR GX(pgrad(self, 0).data(), N, C);
                       if (training) {
                         // d/dx of the batch-statistics normalisation.
                         const double n = N;
                         Eigen::RowVectorXd a = gamma.cwiseProduct(inv) / n;
                         MatR inner = (G * n).rowwise() - gsum;
                         inner.array() -= xhat.array().rowwise() * gxs.array();
                         GX += (inner.array().rowwise() * a.array()).matrix();
                       } else {
                         GX += (G.array().rowwise() * gamma.cwiseProduct(inv).array()).matrix();
                       }
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const int C = x.dim(-1);
  const int N = static_cast<int>(x.size() / static_cast<std::size_t>(C));
  if (gamma.size() != static_cast<std::size_t>(C) || beta.size() != static_cast<std::size_t>(C)) {
    throw ShapeError("layer_norm: parameter size mismatch");
  }
  CMapR X(x.values().data(), N, C);
  Eigen::VectorXd mu = X.rowwise().mean();
  MatR xc = X.colwise() - mu;
  Eigen::VectorXd inv = (xc.array().square().rowwise().mean() + eps).rsqrt();
  MatR xhat = xc.array().colwise() * inv.array();
  Buffer y(x.size());
  MapR(y.data(), N, C) = (xhat.array().rowwise() * CVecMap(gamma.values().data(), C).transpose().array())
                             .rowwise() +
                         CVecMap(beta.values().data(), C).transpose().array();
  return make_result(x.shape(), std::move(y), {x, gamma, beta},
                     [N, C, inv, xhat = std::move(xhat)](Node& self) {
                       CMapR G(self.grad.data(), N, C);
                       if (needs(self, 1)) VecMap(pgrad(self, 1).data(), C) += G.cwiseProduct(xhat).colwise().sum().transpose();
                       if (needs(self, 2)) VecMap(pgrad(self, 2).data(), C) += G.colwise().sum().transpose();
                       if (!needs(self, 0)) return;
                       Eigen::RowVectorXd gamma = CVecMap(pval(self, 1).data(), C).transpose();
                       MatR gh = G.array().rowwise() * gamma.array();
                       Eigen::VectorXd s1 = gh.rowwise().mean();
                       Eigen::VectorXd s2 = gh.cwiseProduct(xhat).rowwise().mean();
                       MatR dx = gh.colwise() - s1;
                       dx -= (xhat.array().colwise() * s2.array()).matrix();
                       MapR(pgrad(self, 0).data(), N, C) += (dx.array().colwise() * inv.array()).matrix();
                     });
}

Tensor l2_normalize(const Tensor& x, double eps) {
  require_rank(x, 2, "l2_normalize");
  const int N = x.dim(0), D = x.dim(1);
  CMapR X(x.values().data(), N, D);
  Eigen::VectorXd norm = X.rowwise().norm().cwiseMax(eps);
  Buffer y(x.size());
  MapR(y.data(), N, D) = X.array().colwise() / norm.array();
  return make_result({N, D}, std::move(y), {x}, [N, D, eps, norm](Node& self) {
    CMapR G(self.grad.data(), N, D);
    CMapR Y(self.value.data(), N, D);
    MapR GX(pgrad(self, 0).data(), N, D);
    for (int i = 0; i < N; ++i) {
      if (norm[i] <= eps) {
        GX.row(i) += G.row(i) / eps;
      } else {
        const double proj = Y.row(i).dot(G.row(i));
        GX.row(i) += (G.row(i) - proj * Y.row(i)) / norm[i];
      }
    }
  });
}

Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads) {
  require_rank(q, 3, "multihead_attention");
  require_same_shape(q, k, "multihead_attention");
  require_same_shape(q, v, "multihead_attention");
  const int B = q.dim(0), L = q.dim(1), D = q.dim(2);
  if (heads < 1 || D % heads != 0) throw ShapeError("multihead_attention: embed dim not divisible by heads");
  const int dh = D / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  Buffer y(q.size());
  std::vector<MatR> probs(static_cast<std::size_t>(B) * heads);
  for (int b = 0; b < B; ++b) {
    const std::size_t off = static_cast<std::size_t>(b) * L * D;
    CMapR Q(q.values().data() + off, L, D), K(k.values().data() + off, L, D), V(v.values().data() + off, L, D);
    MapR Y(y.data() + off, L, D);
    for (int h = 0; h < heads; ++h) {
      MatR S = (Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose()) * sc;
      Eigen::VectorXd mx = S.rowwise().maxCoeff();
      S = (S.colwise() - mx).array().exp();
      Eigen::VectorXd den = S.rowwise().sum();
      S = S.array().colwise() / den.array();
      Y.middleCols(h * dh, dh).noalias() = S * V.middleCols(h * dh, dh);
      probs[static_cast<std::size_t>(b) * heads + h] = std::move(S);
    }
  }
  return make_result(q.shape(), std::move(y), {q, k, v},
                     [B, L, D, heads, dh, sc, probs = std::move(probs)](Node& self) {
                       for (int b = 0; b < B; ++b) {
                         const std::size_t off = static_cast<std::size_t>(b) * L * D;
                         CMapR G(self.grad.data() + off, L, D);
                         CMapR Q(pval(self, 0).data() + off, L, D), K(pval(self, 1).data() + off, L, D),
                             V(pval(self, 2).data() + off, L, D);
                         for (int h = 0; h < heads; ++h) {
                           const MatR& P = probs[static_cast<std::size_t>(b) * heads + h];
                           auto Gh = G.middleCols(h * dh, dh);
                           if (needs(self, 2)) {
                             MapR(pgrad(self, 2).data() + off, L, D).middleCols(h * dh, dh).noalias() += P.transpose() * Gh;
                           }
                           if (!needs(self, 0) && !needs(self, 1)) continue;
                           MatR dP = Gh * V.middleCols(h * dh, dh).transpose();
                           Eigen::VectorXd rs = dP.cwiseProduct(P).rowwise().sum();
                           MatR dS = (P.array() * (dP.colwise() - rs).array()).matrix() * sc;
                           if (needs(self, 0)) {
                             MapR(pgrad(self, 0).data() + off, L, D).middleCols(h * dh, dh).noalias() +=
                                 dS * K.middleCols(h * dh, dh);
                           }
                           if (needs(self, 1)) {
                             MapR(pgrad(self, 1).data() + off, L, D).middleCols(h * dh, dh).noalias() +=
                                 dS.transpose() * Q.middleCols(h * dh, dh);
                           }
                         }
                       }
                     });
}

namespace {
inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Tensor gru_cell(const Tensor& gx, const Tensor& gh, const Tensor& h) {
  require_rank(h, 2, "gru_cell");
  const int B = h.dim(0), H = h.dim(1);
  if (gx.size() != static_cast<std::size_t>(B) * 3 * H || gh.size() != gx.size()) {
    throw ShapeError("gru_cell: gate shapes must be [B, 3H]");
  }
  const std::size_t n = static_cast<std::size_t>(B) * H;
  Buffer r(n), z(n), nn(n), y(n);
  for (int b = 0; b < B; ++b)
    for (int j = 0; j < H; ++j) {
      const std::size_t g = static_cast<std::size_t>(b) * 3 * H;
      const std::size_t o = static_cast<std::size_t>(b) * H + j;
      r[o] = sigm(gx.at(g + j) + gh.at(g + j));
      z[o] = sigm(gx.at(g + H + j) + gh.at(g + H + j));
      nn[o] = std::tanh(gx.at(g + 2 * H + j) + r[o] * gh.at(g + 2 * H + j));
      y[o] = (1.0 - z[o]) * nn[o] + z[o] * h.at(o);
    }
  return make_result({B, H}, std::move(y), {gx, gh, h},
                     [B, H, r = std::move(r), z = std::move(z), nn = std::move(nn)](Node& self) {
                       const auto& ghv = pval(self, 1);
                       const auto& hv = pval(self, 2);
                       Buffer* dgx = needs(self, 0) ? &pgrad(self, 0) : nullptr;
                       Buffer* dgh = needs(self, 1) ? &pgrad(self, 1) : nullptr;
                       Buffer* dh = needs(self, 2) ? &pgrad(self, 2) : nullptr;
                       for (int b = 0; b < B; ++b)
                         for (int j = 0; j < H; ++j) {
                           const std::size_t o = static_cast<std::size_t>(b) * H + j;
                           const std::size_t g = static_cast<std::size_t>(b) * 3 * H;
                           const double d = self.grad[o];
                           const double dn = d * (1.0 - z[o]) * (1.0 - nn[o] * nn[o]);
                           const double dz = d * (hv[o] - nn[o]) * z[o] * (1.0 - z[o]);
                           const double dr = dn * ghv[g + 2 * H + j] * r[o] * (1.0 - r[o]);
                           if (dgx) {
                             (*dgx)[g + j] += dr;
                             (*dgx)[g + H + j] += dz;
                             (*dgx)[g + 2 * H + j] += dn;
                           }
                           if (dgh) {
                             (*dgh)[g + j] += dr;
                             (*dgh)[g + H + j] += dz;
                             (*dgh)[g + 2 * H + j] += dn * r[o];
                           }
                           if (dh) (*dh)[o] += d * z[o];
                         }
                     });
}

Tensor lstm_cell(const Tensor& gates, const Tensor& c) {
  require_rank(c, 2, "lstm_cell");
  const int B = c.dim(0), H = c.dim(1);
  if (gates.size() != static_cast<std::size_t>(B) * 4 * H) throw ShapeError("lstm_cell: gates must be [B, 4H]");
  const std::size_t n = static_cast<std::size_t>(B) * H;
  Buffer i(n), f(n), g(n), o(n), tc(n), y(2 * n);
  for (int b = 0; b < B; ++b)
    for (int j = 0; j < H; ++j) {
      const std::size_t k = static_cast<std::size_t>(b) * H + j;
      const std::size_t base = static_cast<std::size_t>(b) * 4 * H;
      i[k] = sigm(gates.at(base + j));
      f[k] = sigm(gates.at(base + H + j));
      g[k] = std::tanh(gates.at(base + 2 * H + j));
      o[k] = sigm(gates.at(base + 3 * H + j));
      const double cn = f[k] * c.at(k) + i[k] * g[k];
      tc[k] = std::tanh(cn);
      y[static_cast<std::size_t>(b) * 2 * H + j] = o[k] * tc[k];
      y[static_cast<std::size_t>(b) * 2 * H + H + j] = cn;
    }
  return make_result({B, 2 * H}, std::move(y), {gates, c},
                     [B, H, i = std::move(i), f = std::move(f), g = std::move(g), o = std::move(o),
                      tc = std::move(tc)](Node& self) {
                       const auto& cv = pval(self, 1);
                       Buffer* dgates = needs(self, 0) ? &pgrad(self, 0) : nullptr;
                       Buffer* dc = needs(self, 1) ? &pgrad(self, 1) : nullptr;
                       for (int b = 0; b < B; ++b)
                         for (int j = 0; j < H; ++j) {
                           const std::size_t k = static_cast<std::size_t>(b) * H + j;
                           const std::size_t base = static_cast<std::size_t>(b) * 4 * H;
                           const double dh = self.grad[static_cast<std::size_t>(b) * 2 * H + j];
                           const double dcn = self.grad[static_cast<std::size_t>(b) * 2 * H + H + j] +
                                              dh * o[k] * (1.0 - tc[k] * tc[k]);
                           if (dgates) {
                             (*dgates)[base + j] += dcn * g[k] * i[k] * (1.0 - i[k]);
                             (*dgates)[base + H + j] += dcn * cv[k] * f[k] * (1.0 - f[k]);
                             (*dgates)[base + 2 * H + j] += dcn * i[k] * (1.0 - g[k] * g[k]);
                             (*dgates)[base + 3 * H + j] += dh * tc[k] * o[k] * (1.0 - o[k]);
                           }
                           if (dc) (*dc)[k] += dcn * f[k];
                         }
                     });
}

}  // namespace sslhar::nn
