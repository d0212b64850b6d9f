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

#include "sslhar/nn/module.hpp"

#include <cmath>
#include <map>

#include "sslhar/errors.hpp"

namespace sslhar::nn {

std::vector<double> uniform_values(std::size_t n, double bound, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return v;
}

void Module::collect(const std::string& prefix, bool with_buffers, std::vector<NamedTensor>& out) const {
  for (const auto& [name, t] : params_) out.emplace_back(prefix + name, t);
  if (with_buffers) {
    for (const auto& [name, t] : buffers_) out.emplace_back(prefix + name, t);
  }
  for (const auto& [name, child] : children_) child->collect(prefix + name + ".", with_buffers, out);
}

std::vector<NamedTensor> Module::named_parameters() const {
  std::vector<NamedTensor> out;
  collect("", false, out);
  return out;
}

std::vector<Tensor> Module::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<NamedTensor> Module::named_state() const {
  std::vector<NamedTensor> out;
  collect("", true, out);
  return out;
}

void Module::set_training(bool on) {
  training_ = on;
  for (auto& [name, child] : children_) child->set_training(on);
}

void Module::copy_state_from(const Module& other) {
  auto mine = named_state();
  auto theirs = other.named_state();
  if (mine.size() != theirs.size()) throw IntegrityError("copy_state_from: module layouts differ");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].first != theirs[i].first || mine[i].second.shape() != theirs[i].second.shape()) {
      throw IntegrityError("copy_state_from: mismatch at " + mine[i].first);
    }
    auto dst = mine[i].second.values();
    auto src = theirs[i].second.values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

std::size_t Module::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t.size();
  return n;
}

Tensor Module::add_parameter(std::string name, Tensor t) {
  t.set_requires_grad(true);
  params_.emplace_back(std::move(name), t);
  return t;
}

Tensor Module::add_buffer(std::string name, Tensor t) {
  t.set_requires_grad(false);
  buffers_.emplace_back(std::move(name), t);
  return t;
}

Linear::Linear(int in, int out, Rng& rng, bool with_bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = add_parameter("weight", Tensor({in, out}, uniform_values(static_cast<std::size_t>(in) * out, bound, rng)));
  if (with_bias) bias = add_parameter("bias", Tensor({out}, uniform_values(static_cast<std::size_t>(out), bound, rng)));
}

Conv1d::Conv1d(int in_channels, int out_channels, int kernel, ConvPadding padding, PadMode pad_mode, Rng& rng)
    : kernel_(kernel), padding_(padding), pad_mode_(pad_mode) {
  if (kernel < 1 || in_channels < 1 || out_channels < 1) throw ValidationError("Conv1d: invalid geometry");
  const int fan_in = in_channels * kernel;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  weight = add_parameter("weight", Tensor({fan_in, out_channels},
                                          uniform_values(static_cast<std::size_t>(fan_in) * out_channels, bound, rng)));
  bias = add_parameter("bias", Tensor({out_channels}, uniform_values(static_cast<std::size_t>(out_channels), bound, rng)));
}

Tensor Conv1d::forward(const Tensor& x) const {
  const int total = kernel_ - 1;
  if (padding_ == ConvPadding::valid || total == 0) return conv1d(x, weight, bias);
  const int left = padding_ == ConvPadding::causal ? total : total / 2;
  return conv1d(pad_time(x, left, total - left, pad_mode_), weight, bias);
}

BatchNorm1d::BatchNorm1d(int features) {
  gamma = add_parameter("gamma", Tensor({features}, 1.0));
  beta = add_parameter("beta", Tensor({features}, 0.0));
  running_mean = add_buffer("running_mean", Tensor({features}, 0.0));
  running_var = add_buffer("running_var", Tensor({features}, 1.0));
}

Tensor BatchNorm1d::forward(const Tensor& x) {
  return batch_norm(x, gamma, beta, running_mean, running_var, training());
}

LayerNorm::LayerNorm(int features) {
  gamma = add_parameter("gamma", Tensor({features}, 1.0));
  beta = add_parameter("beta", Tensor({features}, 0.0));
}

namespace {

void init_recurrent(Module& /*owner*/, int input, int hidden, int layers, int gates, Rng& rng,
                    std::vector<Tensor>& w_ih, std::vector<Tensor>& w_hh, std::vector<Tensor>& b_ih,
                    std::vector<Tensor>& b_hh) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input : hidden;
    const std::size_t g = static_cast<std::size_t>(gates) * hidden;
    w_ih.emplace_back(Shape{in, gates * hidden}, uniform_values(static_cast<std::size_t>(in) * g, bound, rng));
    w_hh.emplace_back(Shape{hidden, gates * hidden}, uniform_values(static_cast<std::size_t>(hidden) * g, bound, rng));
    b_ih.emplace_back(Shape{gates * hidden}, uniform_values(g, bound, rng));
    b_hh.emplace_back(Shape{gates * hidden}, uniform_values(g, bound, rng));
  }
}

}  // namespace

GRU::GRU(int input, int hidden, int layers, double dropout, Rng& rng) : hidden_(hidden), dropout_(dropout) {
  if (layers < 1 || hidden < 1) throw ValidationError("GRU: invalid geometry");
  init_recurrent(*this, input, hidden, layers, 3, rng, w_ih_, w_hh_, b_ih_, b_hh_);
  for (int l = 0; l < layers; ++l) {
    const std::string s = std::to_string(l);
    w_ih_[l] = add_parameter("weight_ih_l" + s, w_ih_[l]);
    w_hh_[l] = add_parameter("weight_hh_l" + s, w_hh_[l]);
    b_ih_[l] = add_parameter("bias_ih_l" + s, b_ih_[l]);
    b_hh_[l] = add_parameter("bias_hh_l" + s, b_hh_[l]);
  }
}

Tensor GRU::forward(const Tensor& x, Rng& rng, int steps) const {
  if (x.rank() != 3) throw ShapeError("GRU: expected [B, L, C]");
  const int B = x.dim(0);
  const int L = steps < 0 ? x.dim(1) : std::min(steps, x.dim(1));
  Tensor seq = L == x.dim(1) ? x : slice_time(x, 0, L);
  for (std::size_t l = 0; l < w_ih_.size(); ++l) {
    if (l > 0) seq = dropout(seq, dropout_, training(), rng);
    Tensor gx = linear(seq, w_ih_[l], b_ih_[l]);
    Tensor h({B, hidden_}, 0.0);
    std::vector<Tensor> outs;
    outs.reserve(static_cast<std::size_t>(L));
    std::vector<int> t_idx(static_cast<std::size_t>(B));
    for (int t = 0; t < L; ++t) {
      std::fill(t_idx.begin(), t_idx.end(), t);
      Tensor gh = linear(h, w_hh_[l], b_hh_[l]);
      h = gru_cell(gather_time(gx, t_idx), gh, h);
      outs.push_back(h);
    }
    seq = stack_time(outs);
  }
  return seq;
}

LSTM::LSTM(int input, int hidden, int layers, double dropout, Rng& rng) : hidden_(hidden), dropout_(dropout) {
  if (layers < 1 || hidden < 1) throw ValidationError("LSTM: invalid geometry");
  init_recurrent(*this, input, hidden, layers, 4, rng, w_ih_, w_hh_, b_ih_, b_hh_);
  for (int l = 0; l < layers; ++l) {
    const std::string s = std::to_string(l);
    w_ih_[l] = add_parameter("weight_ih_l" + s, w_ih_[l]);
    w_hh_[l] = add_parameter("weight_hh_l" + s, w_hh_[l]);
    b_ih_[l] = add_parameter("bias_ih_l" + s, b_ih_[l]);
    b_hh_[l] = add_parameter("bias_hh_l" + s, b_hh_[l]);
  }
}

Tensor LSTM::forward(const Tensor& x, Rng& rng) const {
  if (x.rank() != 3) throw ShapeError("LSTM: expected [B, L, C]");
  const int B = x.dim(0), L = x.dim(1), H = hidden_;
  Tensor seq = x;
  for (std::size_t l = 0; l < w_ih_.size(); ++l) {
    if (l > 0) seq = dropout(seq, dropout_, training(), rng);
    Tensor gx = linear(seq, w_ih_[l], b_ih_[l]);
    Tensor h({B, H}, 0.0), c({B, H}, 0.0);
    std::vector<Tensor> outs;
    std::vector<int> t_idx(static_cast<std::size_t>(B));
    for (int t = 0; t < L; ++t) {
      std::fill(t_idx.begin(), t_idx.end(), t);
      Tensor gates = add(gather_time(gx, t_idx), linear(h, w_hh_[l], b_hh_[l]));
      Tensor hc = lstm_cell(gates, c);
      h = slice_cols(hc, 0, H);
      c = slice_cols(hc, H, H);
      outs.push_back(h);
    }
    seq = stack_time(outs);
  }
  return seq;
}

TransformerLayer::TransformerLayer(int dim, int heads, int ffn_dim, double dropout, Rng& rng)
    : heads_(heads), dropout_(dropout) {
  if (dim % heads != 0) throw ValidationError("TransformerLayer: dim must be divisible by heads");
  q_ = &add_module("q", std::make_unique<Linear>(dim, dim, rng));
  k_ = &add_module("k", std::make_unique<Linear>(dim, dim, rng));
  v_ = &add_module("v", std::make_unique<Linear>(dim, dim, rng));
  out_ = &add_module("out", std::make_unique<Linear>(dim, dim, rng));
  ff1_ = &add_module("ff1", std::make_unique<Linear>(dim, ffn_dim, rng));
  ff2_ = &add_module("ff2", std::make_unique<Linear>(ffn_dim, dim, rng));
  norm1_ = &add_module("norm1", std::make_unique<LayerNorm>(dim));
  norm2_ = &add_module("norm2", std::make_unique<LayerNorm>(dim));
}

Tensor TransformerLayer::forward(const Tensor& x, Rng& rng) {
  Tensor attn = multihead_attention(q_->forward(x), k_->forward(x), v_->forward(x), heads_);
  attn = dropout(out_->forward(attn), dropout_, training(), rng);
  Tensor h = norm1_->forward(add(x, attn));
  Tensor ff = ff2_->forward(dropout(relu(ff1_->forward(h)), dropout_, training(), rng));
  return norm2_->forward(add(h, dropout(ff, dropout_, training(), rng)));
}

}  // namespace sslhar::nn
