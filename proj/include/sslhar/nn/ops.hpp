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

#pragma once

#include <cstdint>
#include <vector>

#include "sslhar/nn/tensor.hpp"
#include "sslhar/random.hpp"

// Differentiable primitives. Sequence tensors are time-major per window:
// [batch, time, channels]. Matrices are [rows, cols]. All ops validate shapes
// and throw ShapeError on mismatch.
namespace sslhar::nn {

// ---- elementwise ---------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
/// Sum of a list of same-shape tensors.
Tensor add_n(const std::vector<Tensor>& xs);

// ---- reductions ----------------------------------------------------------
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// [N, D] x [N, D] -> [N]
Tensor row_dot(const Tensor& a, const Tensor& b);

// ---- shape ---------------------------------------------------------------
Tensor reshape(const Tensor& a, Shape shape);
/// General axis permutation for rank <= 4.
Tensor permute(const Tensor& a, const std::vector<int>& perm);
/// [B, L, C] -> [B, len, C]
Tensor slice_time(const Tensor& x, int start, int len);
/// [B, L, C] -> [B, C] at per-row time indices.
Tensor gather_time(const Tensor& x, const std::vector<int>& t);
/// list of [B, C] -> [B, L, C]
Tensor stack_time(const std::vector<Tensor>& steps);
/// [N, C] -> [N, len]
Tensor slice_cols(const Tensor& x, int start, int len);
/// [N1, C] + [N2, C] -> [N1 + N2, C]
Tensor concat_rows(const Tensor& a, const Tensor& b);

// ---- linear algebra ------------------------------------------------------
/// x[..., In] W[In, Out] + b[Out]; `b` may be undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
/// [N, K] x [K, M]
Tensor matmul(const Tensor& a, const Tensor& b);
/// [N, K] x [M, K]^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// ---- sequence ------------------------------------------------------------
enum class PadMode { zero, reflect };

/// Pads the time axis of [B, L, C].
Tensor pad_time(const Tensor& x, int left, int right, PadMode mode);
/// Valid 1D convolution. x [B, L, Ci], w [K * Ci, Co] (row index k * Ci + ci),
/// b [Co] -> [B, L - K + 1, Co].
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b);
/// [B, L, C] -> [B, C]
Tensor max_over_time(const Tensor& x);
Tensor mean_over_time(const Tensor& x);

// ---- regularisation and normalisation ------------------------------------
/// Inverted dropout; identity when `training` is false or p == 0.
Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);

/// Batch normalisation over rows of [N, C]. In training mode batch
/// statistics are used and the running buffers are updated in place.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var, bool training,
                  double momentum = 0.1, double eps = 1e-5);
/// Normalises the last axis.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
/// Row-wise x / max(||x||, eps) for [N, D].
Tensor l2_normalize(const Tensor& x, double eps = 1e-12);

// ---- fused blocks --------------------------------------------------------
/// Scaled dot-product attention over [B, L, D] with `heads` equal splits.
Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads);
/// GRU update (gate order r, z, n). gx, gh: [B, 3H], h: [B, H] -> [B, H].
Tensor gru_cell(const Tensor& gx, const Tensor& gh, const Tensor& h);
/// LSTM update (gate order i, f, g, o). gates [B, 4H], c [B, H] -> [B, 2H]
/// holding (h', c').
Tensor lstm_cell(const Tensor& gates, const Tensor& c);

// ---- losses (mean reduction) ---------------------------------------------
/// Softmax cross-entropy over rows of [N, C]. When `candidates` is non-empty
/// it is an [N * C] 0/1 mask; masked-out entries take no part in the softmax.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                     const std::vector<std::uint8_t>& candidates = {});
/// Binary cross-entropy on logits; targets in [0, 1], same shape as logits.
Tensor bce_with_logits(const Tensor& logits, const std::vector<double>& targets);
Tensor mse(const Tensor& a, const Tensor& b);
/// MSE over the time steps of [B, L, C] flagged in `mask` ([B * L], 1 = used).
Tensor masked_mse(const Tensor& pred, const Tensor& target, const std::vector<std::uint8_t>& mask);

}  // namespace sslhar::nn
