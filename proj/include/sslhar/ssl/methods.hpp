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

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "sslhar/augment/transforms.hpp"
#include "sslhar/models/checkpoint.hpp"
#include "sslhar/models/encoders.hpp"
#include "sslhar/models/heads.hpp"
#include "sslhar/ssl/losses.hpp"

namespace sslhar::ssl {

using models::Json;

enum class PretextMethod { multitask, masked_recon, cpc, autoencoder, simclr, simsiam, byol };

inline constexpr std::array<PretextMethod, 7> kAllMethods{PretextMethod::multitask, PretextMethod::masked_recon,
                                                          PretextMethod::cpc,       PretextMethod::autoencoder,
                                                          PretextMethod::simclr,    PretextMethod::simsiam,
                                                          PretextMethod::byol};

std::string to_string(PretextMethod m);
PretextMethod parse_method(const std::string& s);

struct PretextConfig {
  PretextMethod method = PretextMethod::multitask;
  /// Encoder description; null selects the method default.
  Json encoder = nullptr;
  int cpc_k = 32;
  double mask_fraction = 0.1;
  double temperature = 0.1;
  double ema_decay = 0.996;
  augment::TransformParams transforms;

  Json to_json() const;
  static PretextConfig from_json(const Json& j);
};

Json default_encoder_config(PretextMethod m);

class PretextModel : public nn::Module {
 public:
  virtual PretextMethod method() const { return cfg_.method; }
  /// Scalar pretext loss for a batch [B, L, 3].
  virtual Tensor loss(const Tensor& batch, Rng& rng) = 0;
  /// Parameters updated by the optimizer.
  virtual std::vector<Tensor> trainable_parameters() const { return parameters(); }
  /// Hook run after every optimizer step.
  virtual void after_step() {}

  models::Encoder& encoder() { return *encoder_; }
  const PretextConfig& config() const { return cfg_; }
  models::ModelCheckpoint checkpoint() const;
  void load(const models::ModelCheckpoint& ckpt) { models::restore(*this, ckpt); }

 protected:
  PretextModel(PretextConfig cfg, std::unique_ptr<models::Encoder> enc);

  PretextConfig cfg_;
  models::Encoder* encoder_;
};

std::unique_ptr<PretextModel> make_pretext_model(const PretextConfig& cfg, Rng& rng);

std::vector<data::Signal> to_signals(const Tensor& batch);

/// Linear(F, 256) -> ReLU -> Linear(256, 1).
class TaskHead : public nn::Module {
 public:
  TaskHead(int in, Rng& rng);
  Tensor forward(const Tensor& x) const;

 private:
  nn::Linear* fc1_;
  nn::Linear* fc2_;
};

class MultitaskModel : public PretextModel {
 public:
  MultitaskModel(const PretextConfig& cfg, Rng& rng);
  Tensor loss(const Tensor& batch, Rng& rng) override;

 private:
  std::vector<TaskHead*> heads_;
};

class MaskedReconModel : public PretextModel {
 public:
  MaskedReconModel(const PretextConfig& cfg, Rng& rng);
  Tensor loss(const Tensor& batch, Rng& rng) override;
  Tensor loss(const Tensor& batch, const std::vector<MaskSpec>& masks, Rng& rng);
  /// Per-timestep reconstruction [B, L, 3] of an already masked batch.
  Tensor reconstruct(const Tensor& masked, Rng& rng);

 private:
  models::TransformerEncoder* transformer_;
  nn::Linear* out_;
};

class CpcModel : public PretextModel {
 public:
  CpcModel(const PretextConfig& cfg, Rng& rng);
  Tensor loss(const Tensor& batch, Rng& rng) override;
  /// Loss for explicit anchors, one per window.
  Tensor loss(const Tensor& batch, const std::vector<int>& anchors, Rng& rng);

 private:
  models::CpcEncoder* cpc_;
  std::vector<nn::Linear*> predictors_;
};

class AutoencoderModel : public PretextModel {
 public:
  AutoencoderModel(const PretextConfig& cfg, Rng& rng);
  Tensor loss(const Tensor& batch, Rng& rng) override;
  Tensor reconstruct(const Tensor& batch, Rng& rng);

 private:
  models::AutoencoderEncoder* ae_;
  models::Decoder* decoder_;
};

class SimclrModel : public PretextModel {
 public:
  SimclrModel(const PretextConfig& cfg, Rng& rng);
  Tensor loss(const Tensor& batch, Rng& rng) override;

 private:
  models::Head* proj_;
};

struct SiameseOutputs {
  Tensor p_a, p_b, z_a, z_b;
};

class SimsiamModel : public PretextModel {
 public:
  SimsiamModel(const PretextConfig& cfg, Rng& rng);
  Tensor loss(const Tensor& batch, Rng& rng) override;
  /// Predictions and projections of the two views, before the stop-gradient.
  SiameseOutputs outputs(const Tensor& batch, Rng& rng);

 private:
  models::Head* proj_;
  models::Head* pred_;
};

class ByolModel : public PretextModel {
 public:
  ByolModel(const PretextConfig& cfg, Rng& rng);
  Tensor loss(const Tensor& batch, Rng& rng) override;
  std::vector<Tensor> trainable_parameters() const override;
  void after_step() override;

  nn::Module& online_projector() { return *proj_; }
  nn::Module& target_encoder() { return *target_encoder_; }
  nn::Module& target_projector() { return *target_proj_; }

 private:
  models::Head* proj_;
  models::Head* pred_;
  models::Encoder* target_encoder_;
  models::Head* target_proj_;
};

/// target <- decay * target + (1 - decay) * online over matching parameters.
void ema_update(nn::Module& target, const nn::Module& online, double decay);

/// Online and target weights of a BYOL run.
struct ByolState {
  models::ModelCheckpoint online;
  models::ModelCheckpoint target;
  double ema_decay = 0.996;
};

/// Checkpoint-level EMA; throws IntegrityError when the manifests differ.
void ema_update(ByolState& state);

}  // namespace sslhar::ssl
