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

#include "sslhar/ssl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sslhar/errors.hpp"
#include "sslhar/nn/ops.hpp"

namespace sslhar::ssl {

Tensor info_nce(const Tensor& scores) {
  if (scores.rank() != 2 || scores.dim(0) != scores.dim(1)) throw ShapeError("info_nce expects square scores");
  std::vector<int> labels(static_cast<std::size_t>(scores.dim(0)));
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i);
  return nn::cross_entropy(scores, labels);
}

Tensor nt_xent(const Tensor& z, double temperature) {
  if (z.rank() != 2 || z.dim(0) % 2 != 0) throw ShapeError("nt_xent expects [2B, D]");
  const int n = z.dim(0), B = n / 2;
  if (B < 2) throw ValidationError("nt_xent needs a batch of at least 2 windows");
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  Tensor zn = nn::l2_normalize(z);
  Tensor sim = nn::scale(nn::matmul_nt(zn, zn), 1.0 / temperature);
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<std::uint8_t> candidates(static_cast<std::size_t>(n) * n, 1);
  for (int i = 0; i < n; ++i) {
    labels[static_cast<std::size_t>(i)] = i < B ? i + B : i - B;
    candidates[static_cast<std::size_t>(i) * n + i] = 0;
  }
  return nn::cross_entropy(sim, labels, candidates);
}

Tensor multitask_bce(const std::vector<Tensor>& task_logits, const std::vector<std::vector<double>>& task_targets) {
  if (task_logits.empty() || task_logits.size() != task_targets.size()) throw ShapeError("multitask_bce: task count mismatch");
  std::vector<Tensor> losses;
  for (std::size_t t = 0; t < task_logits.size(); ++t) losses.push_back(nn::bce_with_logits(task_logits[t], task_targets[t]));
  return nn::scale(nn::add_n(losses), 1.0 / static_cast<double>(losses.size()));
}

Tensor negative_cosine(const Tensor& p, const Tensor& z) {
  if (p.shape() != z.shape() || p.rank() != 2) throw ShapeError("negative_cosine expects matching [N, D]");
  return nn::scale(nn::mean(nn::row_dot(nn::l2_normalize(p), nn::l2_normalize(z))), -1.0);
}

Tensor simsiam_objective(const Tensor& p_a, const Tensor& p_b, const Tensor& z_a, const Tensor& z_b) {
  return nn::scale(nn::add(negative_cosine(p_a, z_b.detach()), negative_cosine(p_b, z_a.detach())), 0.5);
}

Tensor normalized_mse(const Tensor& p, const Tensor& t) {
  if (p.shape() != t.shape() || p.rank() != 2) throw ShapeError("normalized_mse expects matching [N, D]");
  Tensor d = nn::sub(nn::l2_normalize(p), nn::l2_normalize(t));
  return nn::scale(nn::sum(nn::mul(d, d)), 1.0 / p.dim(0));
}

Tensor byol_objective(const Tensor& p_a, const Tensor& p_b, const Tensor& t_a, const Tensor& t_b) {
  return nn::scale(nn::add(normalized_mse(p_a, t_b.detach()), normalized_mse(p_b, t_a.detach())), 0.5);
}

void MaskSpec::validate(int length) const {
  if (masked_indices.empty()) throw ValidationError("mask selects no timesteps");
  std::set<int> seen;
  for (int i : masked_indices) {
    if (i < 0 || i >= length) throw ValidationError("mask index out of range");
    if (!seen.insert(i).second) throw ValidationError("duplicate mask index");
  }
}

MaskSpec make_mask(int length, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("mask fraction must lie in (0, 1)");
  const int count = static_cast<int>(std::lround(fraction * length));
  if (count < 1) throw ValidationError("mask fraction selects no timesteps");
  std::vector<int> order = rng.permutation(length);
  MaskSpec m;
  m.mask_fraction = fraction;
  m.masked_indices.assign(order.begin(), order.begin() + count);
  std::sort(m.masked_indices.begin(), m.masked_indices.end());
  return m;
}

std::vector<std::uint8_t> mask_indicator(const std::vector<MaskSpec>& specs, int length) {
  std::vector<std::uint8_t> out(specs.size() * static_cast<std::size_t>(length), 0);
  for (std::size_t b = 0; b < specs.size(); ++b) {
    specs[b].validate(length);
    for (int t : specs[b].masked_indices) out[b * static_cast<std::size_t>(length) + static_cast<std::size_t>(t)] = 1;
  }
  return out;
}

Tensor apply_masks(const Tensor& x, const std::vector<MaskSpec>& specs) {
  if (x.rank() != 3 || static_cast<std::size_t>(x.dim(0)) != specs.size()) throw ShapeError("apply_masks: one spec per window");
  const int L = x.dim(1), C = x.dim(2);
  const auto ind = mask_indicator(specs, L);
  std::vector<double> v(x.values().begin(), x.values().end());
  for (std::size_t r = 0; r < ind.size(); ++r) {
    if (ind[r]) std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(r * static_cast<std::size_t>(C)), C, 0.0);
  }
  return Tensor(x.shape(), std::move(v));
}

}  // namespace sslhar::ssl
