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

namespace sslhar::ssl {

using nn::Tensor;

/// Mean cross-entropy of scores [N, N] where column i is the positive for row i.
Tensor info_nce(const Tensor& scores);

/// NT-Xent over z [2B, D]; rows i and i+B are the two views of window i.
Tensor nt_xent(const Tensor& z, double temperature);

/// Mean binary cross-entropy over the task logits, each [B, 1].
Tensor multitask_bce(const std::vector<Tensor>& task_logits, const std::vector<std::vector<double>>& task_targets);

/// Negative cosine similarity averaged over rows.
Tensor negative_cosine(const Tensor& p, const Tensor& z);

/// 0.5 * D(p_a, sg(z_b)) + 0.5 * D(p_b, sg(z_a)).
Tensor simsiam_objective(const Tensor& p_a, const Tensor& p_b, const Tensor& z_a, const Tensor& z_b);

/// Mean over rows of ||p/|p| - t/|t|||^2, equal to 2 - 2 cos(p, t).
Tensor normalized_mse(const Tensor& p, const Tensor& t);

/// 0.5 * (l(p_a, t_b) + l(p_b, t_a)) with the targets treated as constants.
Tensor byol_objective(const Tensor& p_a, const Tensor& p_b, const Tensor& t_a, const Tensor& t_b);

struct MaskSpec {
  double mask_fraction = 0.1;
  std::vector<int> masked_indices;

  /// Throws ValidationError on duplicates, out-of-range or empty indices.
  void validate(int length) const;
};

/// round(fraction * L) distinct timesteps drawn uniformly.
MaskSpec make_mask(int length, double fraction, Rng& rng);

/// Flattened [B * L] indicator of masked steps.
std::vector<std::uint8_t> mask_indicator(const std::vector<MaskSpec>& specs, int length);

/// Copy of x [B, L, C] with the masked steps of each window set to zero.
Tensor apply_masks(const Tensor& x, const std::vector<MaskSpec>& specs);

}  // namespace sslhar::ssl
