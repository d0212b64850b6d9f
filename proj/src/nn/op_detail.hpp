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

#include <Eigen/Core>

#include "sslhar/nn/tensor.hpp"

// Internal helpers shared by the op translation units.
namespace sslhar::nn::detail {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using CVecMap = Eigen::Map<const Eigen::VectorXd>;

inline bool needs(const Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

inline Buffer& pgrad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  p.ensure_grad();
  return p.grad;
}

inline const Buffer& pval(const Node& self, std::size_t i) {
  return self.parents[i]->value;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);
void require_rank(const Tensor& a, int rank, const char* op);

}  // namespace sslhar::nn::detail
