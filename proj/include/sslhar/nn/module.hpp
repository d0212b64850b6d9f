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

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sslhar/nn/ops.hpp"
#include "sslhar/nn/tensor.hpp"
#include "sslhar/random.hpp"

namespace sslhar::nn {

using NamedTensor = std::pair<std::string, Tensor>;

/// Owner of parameters, buffers and child modules. Names are dotted paths
/// ("encoder.conv0.weight") and double as checkpoint keys. Modules are
/// pinned in memory because the registry keeps pointers to children.
class Module {
 public:
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;
  virtual ~Module() = default;

  std::vector<NamedTensor> named_parameters() const;
  std::vector<Tensor> parameters() const;
  /// Parameters followed by buffers (running statistics).
  std::vector<NamedTensor> named_state() const;

  void set_training(bool on);
  bool training() const { return training_; }

  /// Copies every state array by name from a module with the same layout.
  void copy_state_from(const Module& other);
  std::size_t parameter_count() const;

 protected:
  Tensor add_parameter(std::string name, Tensor t);
  Tensor add_buffer(std::string name, Tensor t);
  template <class M>
  M& add_module(std::string name, std::unique_ptr<M> m) {
    M& ref = *m;
    children_.emplace_back(std::move(name), m.get());
    owned_.push_back(std::move(m));
    return ref;
  }
  /// Registers a child owned elsewhere (e.g. a member object).
  void register_module(std::string name, Module& m) { children_.emplace_back(std::move(name), &m); }

 private:
  void collect(const std::string& prefix, bool with_buffers, std::vector<NamedTensor>& out) const;

  std::vector<NamedTensor> params_;
  std::vector<NamedTensor> buffers_;
  std::vector<std::pair<std::string, Module*>> children_;
  std::vector<std::unique_ptr<Module>> owned_;
  bool training_ = true;
};

/// Uniform(-bound, bound) values.
std::vector<double> uniform_values(std::size_t n, double bound, Rng& rng);

class Linear : public Module {
 public:
  Linear(int in, int out, Rng& rng, bool bias = true);
  Tensor forward(const Tensor& x) const { return linear(x, weight, bias); }
  int in_features() const { return weight.dim(0); }
  int out_features() const { return weight.dim(1); }

  Tensor weight;
  Tensor bias;
};

/// 1D convolution over time-major [B, L, C]. `same` padding keeps L, with
/// floor((K-1)/2) steps added on the left; `causal` puts all K-1 on the left.
enum class ConvPadding { valid, same, causal };

class Conv1d : public Module {
 public:
  Conv1d(int in_channels, int out_channels, int kernel, ConvPadding padding, PadMode pad_mode, Rng& rng);
  Tensor forward(const Tensor& x) const;
  int kernel() const { return kernel_; }
  int out_channels() const { return weight.dim(1); }

  Tensor weight;
  Tensor bias;

 private:
  int kernel_;
  ConvPadding padding_;
  PadMode pad_mode_;
};

class BatchNorm1d : public Module {
 public:
  explicit BatchNorm1d(int features);
  Tensor forward(const Tensor& x);

  Tensor gamma, beta, running_mean, running_var;
};

class LayerNorm : public Module {
 public:
  explicit LayerNorm(int features);
  Tensor forward(const Tensor& x) const { return layer_norm(x, gamma, beta); }

  Tensor gamma, beta;
};

/// Multi-layer GRU (PyTorch gate layout), batch-first time-major input.
class GRU : public Module {
 public:
  GRU(int input, int hidden, int layers, double dropout, Rng& rng);
  /// [B, L, In] -> [B, L, H]; outputs of the top layer at every step.
  /// `steps` limits the unrolled length (default: all).
  Tensor forward(const Tensor& x, Rng& rng, int steps = -1) const;
  int hidden() const { return hidden_; }

 private:
  int hidden_;
  double dropout_;
  std::vector<Tensor> w_ih_, w_hh_, b_ih_, b_hh_;
};

class LSTM : public Module {
 public:
  LSTM(int input, int hidden, int layers, double dropout, Rng& rng);
  Tensor forward(const Tensor& x, Rng& rng) const;
  int hidden() const { return hidden_; }

 private:
  int hidden_;
  double dropout_;
  std::vector<Tensor> w_ih_, w_hh_, b_ih_, b_hh_;
};

/// Post-norm transformer encoder layer (self-attention + position-wise FFN).
class TransformerLayer : public Module {
 public:
  TransformerLayer(int dim, int heads, int ffn_dim, double dropout, Rng& rng);
  Tensor forward(const Tensor& x, Rng& rng);

 private:
  int heads_;
  double dropout_;
  Linear* q_;
  Linear* k_;
  Linear* v_;
  Linear* out_;
  Linear* ff1_;
  Linear* ff2_;
  LayerNorm* norm1_;
  LayerNorm* norm2_;
};

}  // namespace sslhar::nn
