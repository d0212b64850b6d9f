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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sslhar/data/types.hpp"
#include "sslhar/nn/module.hpp"

namespace sslhar::models {

using nn::Tensor;
using Json = nlohmann::json;

/// [B, L, 3] tensor from the selected windows.
Tensor make_batch(const data::WindowSet& ws, const std::vector<std::size_t>& indices);
Tensor make_batch(const std::vector<data::Signal>& signals);

struct LayerOutput {
  std::string name;
  Tensor value;
};

struct ConvLayerSpec {
  int filters = 0;
  int kernel = 0;
};

/// Conv1d -> ReLU -> dropout per layer.
class ConvStack : public nn::Module {
 public:
  ConvStack(int in_channels, const std::vector<ConvLayerSpec>& layers, double dropout, nn::ConvPadding padding,
            nn::PadMode pad_mode, Rng& rng);
  /// When `taps` is given, the conv outputs before activation are appended.
  Tensor forward(const Tensor& x, Rng& rng, std::vector<LayerOutput>* taps = nullptr) const;
  int out_channels() const { return convs_.back()->out_channels(); }
  int min_length() const;
  std::size_t depth() const { return convs_.size(); }

 private:
  std::vector<nn::Conv1d*> convs_;
  double dropout_;
  nn::ConvPadding padding_;
};

class Encoder : public nn::Module {
 public:
  virtual std::string kind() const = 0;
  virtual Json config() const = 0;
  virtual int feature_dim() const = 0;
  virtual int min_length() const = 0;
  /// Per-window features [B, F] used by downstream classifiers.
  virtual Tensor features(const Tensor& x, Rng& rng) = 0;
  /// Layer outputs taken before activation and dropout.
  virtual std::vector<LayerOutput> layer_outputs(const Tensor& x, Rng& rng) = 0;
  /// Per-window features used for the principal-component analysis.
  virtual Tensor pca_features(const Tensor& x, Rng& rng) { return features(x, rng); }

 protected:
  void check_input(const Tensor& x) const;
};

struct ConvEncoderConfig {
  std::vector<int> filters{32, 64, 96};
  std::vector<int> kernels{24, 16, 8};
  double dropout = 0.1;
  bool global_max_pool = true;
  std::optional<ConvLayerSpec> extra_block;
  nn::ConvPadding padding = nn::ConvPadding::same;

  void validate() const;
  std::vector<ConvLayerSpec> layers() const;
  int feature_dim() const;
};

class ConvEncoder : public Encoder {
 public:
  ConvEncoder(const ConvEncoderConfig& cfg, Rng& rng);
  std::string kind() const override { return "conv"; }
  Json config() const override;
  int feature_dim() const override { return cfg_.feature_dim(); }
  int min_length() const override { return stack_->min_length(); }
  /// [B, L', F] after the last block.
  Tensor sequence(const Tensor& x, Rng& rng, std::vector<LayerOutput>* taps = nullptr);
  Tensor features(const Tensor& x, Rng& rng) override;
  std::vector<LayerOutput> layer_outputs(const Tensor& x, Rng& rng) override;
  const ConvEncoderConfig& cfg() const { return cfg_; }

 private:
  ConvEncoderConfig cfg_;
  ConvStack* stack_;
};

struct CpcEncoderConfig {
  std::vector<int> filters{32, 64, 128};
  int kernel = 3;
  double dropout = 0.2;
  int gru_units = 256;
  int gru_layers = 2;
  nn::ConvPadding padding = nn::ConvPadding::causal;

  void validate() const;
};

class CpcEncoder : public Encoder {
 public:
  struct Output {
    Tensor latents;  // [B, L, Z]
    Tensor context;  // [B, steps, H]
  };

  CpcEncoder(const CpcEncoderConfig& cfg, Rng& rng);
  std::string kind() const override { return "cpc"; }
  Json config() const override;
  int feature_dim() const override { return cfg_.gru_units; }
  int latent_dim() const { return cfg_.filters.back(); }
  int min_length() const override { return stack_->min_length(); }
  /// Context is unrolled for `context_steps` steps (default: all).
  Output forward(const Tensor& x, Rng& rng, int context_steps = -1, std::vector<LayerOutput>* taps = nullptr);
  /// Context at the last timestep.
  Tensor features(const Tensor& x, Rng& rng) override;
  std::vector<LayerOutput> layer_outputs(const Tensor& x, Rng& rng) override;
  /// Mean over time of the last convolutional layer.
  Tensor pca_features(const Tensor& x, Rng& rng) override;
  const CpcEncoderConfig& cfg() const { return cfg_; }

 private:
  CpcEncoderConfig cfg_;
  ConvStack* stack_;
  nn::GRU* gru_;
};

struct TransformerEncoderConfig {
  int embed_dim = 128;
  int heads = 8;
  int layers = 4;
  int ffn_dim = 512;
  double dropout = 0.1;
  bool positional = true;

  void validate() const;
};

/// Fixed sinusoidal codes [L, D]: sin on even columns, cos on odd.
std::vector<double> sinusoidal_positions(int length, int dim);

class TransformerEncoder : public Encoder {
 public:
  TransformerEncoder(const TransformerEncoderConfig& cfg, Rng& rng);
  std::string kind() const override { return "transformer"; }
  Json config() const override;
  int feature_dim() const override { return cfg_.embed_dim; }
  int min_length() const override { return 1; }
  /// [B, L, D] per-timestep outputs.
  Tensor forward(const Tensor& x, Rng& rng, std::vector<LayerOutput>* taps = nullptr);
  /// Mean over time.
  Tensor features(const Tensor& x, Rng& rng) override;
  std::vector<LayerOutput> layer_outputs(const Tensor& x, Rng& rng) override;
  const TransformerEncoderConfig& cfg() const { return cfg_; }

 private:
  TransformerEncoderConfig cfg_;
  nn::Conv1d* embed_;
  std::vector<nn::TransformerLayer*> layers_;
};

struct AutoencoderConfig {
  std::vector<int> filters{32, 64, 128};
  int kernel = 5;
  double dropout = 0.2;

  void validate() const;
};

class AutoencoderEncoder : public Encoder {
 public:
  AutoencoderEncoder(const AutoencoderConfig& cfg, Rng& rng);
  std::string kind() const override { return "autoencoder"; }
  Json config() const override;
  int feature_dim() const override { return cfg_.filters.back(); }
  int min_length() const override { return stack_->min_length(); }
  /// [B, L, Z], length preserving.
  Tensor latent(const Tensor& x, Rng& rng, std::vector<LayerOutput>* taps = nullptr);
  /// Global max pool over the latent.
  Tensor features(const Tensor& x, Rng& rng) override;
  std::vector<LayerOutput> layer_outputs(const Tensor& x, Rng& rng) override;
  const AutoencoderConfig& cfg() const { return cfg_; }

 private:
  AutoencoderConfig cfg_;
  ConvStack* stack_;
};

/// Mirror of the autoencoder encoder followed by a per-timestep projection to 3 channels.
class Decoder : public nn::Module {
 public:
  Decoder(const AutoencoderConfig& cfg, Rng& rng);
  Tensor forward(const Tensor& latent, Rng& rng) const;
  int kernel() const { return kernel_; }

 private:
  int kernel_;
  ConvStack* stack_;
  nn::Linear* out_;
};

std::unique_ptr<Encoder> make_encoder(const Json& cfg, Rng& rng);

ConvEncoderConfig conv_config_from_json(const Json& j);
CpcEncoderConfig cpc_config_from_json(const Json& j);
TransformerEncoderConfig transformer_config_from_json(const Json& j);
AutoencoderConfig autoencoder_config_from_json(const Json& j);

std::string to_string(nn::ConvPadding p);
nn::ConvPadding parse_padding(const std::string& s);

}  // namespace sslhar::models
