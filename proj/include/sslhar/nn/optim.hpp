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

#include <vector>

#include "sslhar/nn/tensor.hpp"

namespace sslhar::nn {

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(double lr) = 0;
  void zero_grad();
  const std::vector<Tensor>& parameters() const { return params_; }

 protected:
  explicit Optimizer(std::vector<Tensor> params) : params_(std::move(params)) {}
  std::vector<Tensor> params_;
};

/// Adam with coupled L2 regularisation (the penalty is added to the gradient).
class Adam : public Optimizer {
 public:
  Adam(std::vector<Tensor> params, double weight_decay = 0.0, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);
  void step(double lr) override;

 private:
  double weight_decay_, beta1_, beta2_, eps_;
  long step_count_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// SGD with heavy-ball momentum and L2 weight decay.
class SGD : public Optimizer {
 public:
  SGD(std::vector<Tensor> params, double momentum = 0.9, double weight_decay = 0.0);
  void step(double lr) override;

 private:
  double momentum_, weight_decay_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace sslhar::nn
