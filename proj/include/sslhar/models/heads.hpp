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

#include <string>
#include <vector>

#include "sslhar/nn/module.hpp"

namespace sslhar::models {

using nn::Tensor;

enum class HeadKind { linear, mlp256_128, simclr_proj, simsiam_proj, simsiam_pred, byol_proj, byol_pred };

std::string to_string(HeadKind k);
HeadKind parse_head(const std::string& s);

/// Stack of affine layers; each hidden layer may carry batch norm, ReLU and dropout.
class Head : public nn::Module {
 public:
  /// `num_classes` sets the output width of the classifier kinds and is ignored otherwise.
  Head(HeadKind kind, int in_features, Rng& rng, int num_classes = 0);
  /// [N, F] -> [N, out]
  Tensor forward(const Tensor& x, Rng& rng);
  HeadKind kind() const { return kind_; }
  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  struct Layer {
    nn::Linear* linear = nullptr;
    nn::BatchNorm1d* norm = nullptr;
    bool relu = false;
    double dropout = 0.0;
  };
  void add_layer(int in, int out, bool norm, bool relu, double dropout, Rng& rng);

  HeadKind kind_;
  int in_;
  int out_;
  std::vector<Layer> layers_;
};

/// Logits [N, C] for a classifier head on frozen features [N, F].
Tensor classifier_forward(Head& head, const Tensor& features, Rng& rng);

}  // namespace sslhar::models
