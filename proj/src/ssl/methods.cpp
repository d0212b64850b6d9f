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

#include "sslhar/ssl/methods.hpp"

#include <algorithm>

#include "sslhar/errors.hpp"

namespace sslhar::ssl {

using models::Encoder;

std::string to_string(PretextMethod m) {
  switch (m) {
    case PretextMethod::multitask: return "multitask";
    case PretextMethod::masked_recon: return "masked_recon";
    case PretextMethod::cpc: return "cpc";
    case PretextMethod::autoencoder: return "autoencoder";
    case PretextMethod::simclr: return "simclr";
    case PretextMethod::simsiam: return "simsiam";
    case PretextMethod::byol: return "byol";
  }
  return "multitask";
}

PretextMethod parse_method(const std::string& s) {
  for (auto m : kAllMethods) {
    if (to_string(m) == s) return m;
  }
  throw ValidationError("unknown pretext method '" + s + "'");
}

Json PretextConfig::to_json() const {
  return {{"method", to_string(method)},
          {"encoder", encoder},
          {"cpc_k", cpc_k},
          {"mask_fraction", mask_fraction},
          {"temperature", temperature},
          {"ema_decay", ema_decay},
          {"transforms",
           {{"jitter_std", transforms.jitter_std},
            {"scale_mean", transforms.scale_mean},
            {"scale_std", transforms.scale_std},
            {"scramble_sections", transforms.scramble_sections},
            {"warp_knots", transforms.warp_knots},
            {"warp_speed_std", transforms.warp_speed_std}}}};
}

PretextConfig PretextConfig::from_json(const Json& j) {
  PretextConfig c;
  c.method = parse_method(j.at("method").get<std::string>());
  c.encoder = j.value("encoder", Json(nullptr));
  c.cpc_k = j.value("cpc_k", c.cpc_k);
  c.mask_fraction = j.value("mask_fraction", c.mask_fraction);
  c.temperature = j.value("temperature", c.temperature);
  c.ema_decay = j.value("ema_decay", c.ema_decay);
  if (j.contains("transforms")) {
    const Json& t = j["transforms"];
    c.transforms.jitter_std = t.value("jitter_std", c.transforms.jitter_std);
    c.transforms.scale_mean = t.value("scale_mean", c.transforms.scale_mean);
    c.transforms.scale_std = t.value("scale_std", c.transforms.scale_std);
    c.transforms.scramble_sections = t.value("scramble_sections", c.transforms.scramble_sections);
    c.transforms.warp_knots = t.value("warp_knots", c.transforms.warp_knots);
    c.transforms.warp_speed_std = t.value("warp_speed_std", c.transforms.warp_speed_std);
  }
  return c;
}

Json default_encoder_config(PretextMethod m) {
  switch (m) {
    case PretextMethod::masked_recon: return {{"kind", "transformer"}};
    case PretextMethod::cpc: return {{"kind", "cpc"}};
    case PretextMethod::autoencoder: return {{"kind", "autoencoder"}};
    default: return {{"kind", "conv"}};
  }
}

namespace {

std::unique_ptr<Encoder> build_encoder(const PretextConfig& cfg, const std::string& required_kind, Rng& rng) {
  Json j = cfg.encoder.is_null() ? default_encoder_config(cfg.method) : cfg.encoder;
  const std::string kind = j.value("kind", std::string("conv"));
  if (!required_kind.empty() && kind != required_kind) {
    throw ValidationError(to_string(cfg.method) + " needs a " + required_kind + " encoder, got " + kind);
  }
  return models::make_encoder(j, rng);
}

template <class T>
T* as(Encoder* e) {
  auto* p = dynamic_cast<T*>(e);
  if (!p) throw ValidationError("encoder has the wrong kind for this method");
  return p;
}

}  // namespace

PretextModel::PretextModel(PretextConfig cfg, std::unique_ptr<Encoder> enc) : cfg_(std::move(cfg)) {
  cfg_.transforms.validate();
  encoder_ = &add_module("encoder", std::move(enc));
  cfg_.encoder = encoder_->config();
}

models::ModelCheckpoint PretextModel::checkpoint() const {
  models::ModelCheckpoint ckpt;
  ckpt.arch = {{"encoder", encoder_->config()}, {"pretext", cfg_.to_json()}};
  ckpt.pretext_method = to_string(cfg_.method);
  models::capture(ckpt, *this);
  return ckpt;
}

std::vector<data::Signal> to_signals(const Tensor& batch) {
  if (batch.rank() != 3 || batch.dim(2) != 3) throw ShapeError("expected a [B, L, 3] batch");
  const int B = batch.dim(0), L = batch.dim(1);
  std::vector<data::Signal> out;
  out.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    out.emplace_back(Eigen::Map<const data::Signal>(batch.values().data() + static_cast<std::size_t>(b) * L * 3, L, 3));
  }
  return out;
}

TaskHead::TaskHead(int in, Rng& rng) {
  fc1_ = &add_module("fc1", std::make_unique<nn::Linear>(in, 256, rng));
  fc2_ = &add_module("fc2", std::make_unique<nn::Linear>(256, 1, rng));
}

Tensor TaskHead::forward(const Tensor& x) const { return fc2_->forward(nn::relu(fc1_->forward(x))); }

MultitaskModel::MultitaskModel(const PretextConfig& cfg, Rng& rng) : PretextModel(cfg, build_encoder(cfg, "", rng)) {
  for (int t = 0; t < augment::kNumTransforms; ++t) {
    heads_.push_back(&add_module("task" + std::to_string(t), std::make_unique<TaskHead>(encoder_->feature_dim(), rng)));
  }
}

Tensor MultitaskModel::loss(const Tensor& batch, Rng& rng) {
  std::vector<data::Signal> views;
  std::vector<std::vector<double>> targets(augment::kNumTransforms);
  for (const auto& w : to_signals(batch)) {
    augment::MultitaskSample s = augment::sample_multitask_batch(w, cfg_.transforms, rng);
    for (int t = 0; t < augment::kNumTransforms; ++t) targets[static_cast<std::size_t>(t)].push_back(s.applied[static_cast<std::size_t>(t)]);
    views.push_back(std::move(s.transformed));
  }
  Tensor f = encoder_->features(models::make_batch(views), rng);
  std::vector<Tensor> logits;
  for (auto* h : heads_) logits.push_back(h->forward(f));
  return multitask_bce(logits, targets);
}

MaskedReconModel::MaskedReconModel(const PretextConfig& cfg, Rng& rng)
    : PretextModel(cfg, build_encoder(cfg, "transformer", rng)) {
  transformer_ = as<models::TransformerEncoder>(encoder_);
  out_ = &add_module("reconstruct", std::make_unique<nn::Linear>(transformer_->feature_dim(), 3, rng));
}

Tensor MaskedReconModel::reconstruct(const Tensor& masked, Rng& rng) {
  return out_->forward(transformer_->forward(masked, rng));
}

Tensor MaskedReconModel::loss(const Tensor& batch, const std::vector<MaskSpec>& masks, Rng& rng) {
  const auto indicator = mask_indicator(masks, batch.dim(1));
  return nn::masked_mse(reconstruct(apply_masks(batch, masks), rng), batch, indicator);
}

Tensor MaskedReconModel::loss(const Tensor& batch, Rng& rng) {
  std::vector<MaskSpec> masks;
  for (int b = 0; b < batch.dim(0); ++b) masks.push_back(make_mask(batch.dim(1), cfg_.mask_fraction, rng));
  return loss(batch, masks, rng);
}

CpcModel::CpcModel(const PretextConfig& cfg, Rng& rng) : PretextModel(cfg, build_encoder(cfg, "cpc", rng)) {
  cpc_ = as<models::CpcEncoder>(encoder_);
  if (cfg_.cpc_k < 1) throw ValidationError("cpc: k must be positive");
  for (int j = 0; j < cfg_.cpc_k; ++j) {
    predictors_.push_back(&add_module("predict" + std::to_string(j + 1),
                                      std::make_unique<nn::Linear>(cpc_->feature_dim(), cpc_->latent_dim(), rng, false)));
  }
}

Tensor CpcModel::loss(const Tensor& batch, Rng& rng) {
  const int L = batch.dim(1), k = cfg_.cpc_k;
  if (k >= L) throw ValidationError("cpc: k = " + std::to_string(k) + " must be smaller than L = " + std::to_string(L));
  std::vector<int> anchors;
  for (int b = 0; b < batch.dim(0); ++b) anchors.push_back(rng.uniform_int(0, L - k - 1));
  return loss(batch, anchors, rng);
}

Tensor CpcModel::loss(const Tensor& batch, const std::vector<int>& anchors, Rng& rng) {
  const int L = batch.dim(1), k = cfg_.cpc_k;
  if (k >= L) throw ValidationError("cpc: k = " + std::to_string(k) + " must be smaller than L = " + std::to_string(L));
  if (anchors.size() != static_cast<std::size_t>(batch.dim(0))) throw ShapeError("cpc: one anchor per window");
  for (int t : anchors) {
    if (t < 0 || t + k >= L) throw ValidationError("cpc: anchor leaves no room for k future steps");
  }
  const int steps = *std::max_element(anchors.begin(), anchors.end()) + 1;
  auto out = cpc_->forward(batch, rng, steps);
  Tensor c = nn::gather_time(out.context, anchors);
  std::vector<Tensor> terms;
  std::vector<int> future(anchors);
  for (int j = 0; j < k; ++j) {
    for (auto& t : future) ++t;
    Tensor pred = predictors_[static_cast<std::size_t>(j)]->forward(c);
    terms.push_back(info_nce(nn::matmul_nt(pred, nn::gather_time(out.latents, future))));
  }
  return nn::scale(nn::add_n(terms), 1.0 / k);
}

AutoencoderModel::AutoencoderModel(const PretextConfig& cfg, Rng& rng)
    : PretextModel(cfg, build_encoder(cfg, "autoencoder", rng)) {
  ae_ = as<models::AutoencoderEncoder>(encoder_);
  decoder_ = &add_module("decoder", std::make_unique<models::Decoder>(ae_->cfg(), rng));
}

Tensor AutoencoderModel::reconstruct(const Tensor& batch, Rng& rng) { return decoder_->forward(ae_->latent(batch, rng), rng); }

Tensor AutoencoderModel::loss(const Tensor& batch, Rng& rng) { return nn::mse(reconstruct(batch, rng), batch); }

SimclrModel::SimclrModel(const PretextConfig& cfg, Rng& rng) : PretextModel(cfg, build_encoder(cfg, "", rng)) {
  proj_ = &add_module("projector", std::make_unique<models::Head>(models::HeadKind::simclr_proj, encoder_->feature_dim(), rng));
}

Tensor SimclrModel::loss(const Tensor& batch, Rng& rng) {
  if (batch.dim(0) < 2) throw ValidationError("simclr needs a batch of at least 2 windows");
  std::vector<data::Signal> a, b;
  for (const auto& w : to_signals(batch)) {
    auto [va, vb] = augment::sample_contrastive_pair(w, cfg_.transforms, rng);
    a.push_back(std::move(va));
    b.push_back(std::move(vb));
  }
  a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
  Tensor z = proj_->forward(encoder_->features(models::make_batch(a), rng), rng);
  return nt_xent(z, cfg_.temperature);
}

namespace {

std::pair<Tensor, Tensor> two_views(const Tensor& batch, const augment::TransformParams& params, Rng& rng) {
  std::vector<data::Signal> a, b;
  for (const auto& w : to_signals(batch)) {
    auto [va, vb] = augment::sample_contrastive_pair(w, params, rng);
    a.push_back(std::move(va));
    b.push_back(std::move(vb));
  }
  return {models::make_batch(a), models::make_batch(b)};
}

}  // namespace

SimsiamModel::SimsiamModel(const PretextConfig& cfg, Rng& rng) : PretextModel(cfg, build_encoder(cfg, "", rng)) {
  proj_ = &add_module("projector", std::make_unique<models::Head>(models::HeadKind::simsiam_proj, encoder_->feature_dim(), rng));
  pred_ = &add_module("predictor", std::make_unique<models::Head>(models::HeadKind::simsiam_pred, proj_->out_features(), rng));
}

SiameseOutputs SimsiamModel::outputs(const Tensor& batch, Rng& rng) {
  auto [xa, xb] = two_views(batch, cfg_.transforms, rng);
  SiameseOutputs o;
  o.z_a = proj_->forward(encoder_->features(xa, rng), rng);
  o.z_b = proj_->forward(encoder_->features(xb, rng), rng);
  o.p_a = pred_->forward(o.z_a, rng);
  o.p_b = pred_->forward(o.z_b, rng);
  return o;
}

Tensor SimsiamModel::loss(const Tensor& batch, Rng& rng) {
  SiameseOutputs o = outputs(batch, rng);
  return simsiam_objective(o.p_a, o.p_b, o.z_a, o.z_b);
}

ByolModel::ByolModel(const PretextConfig& cfg, Rng& rng) : PretextModel(cfg, build_encoder(cfg, "", rng)) {
  if (!(cfg_.ema_decay > 0.0 && cfg_.ema_decay < 1.0)) throw ValidationError("byol: ema_decay must lie in (0, 1)");
  proj_ = &add_module("projector", std::make_unique<models::Head>(models::HeadKind::byol_proj, encoder_->feature_dim(), rng));
  pred_ = &add_module("predictor", std::make_unique<models::Head>(models::HeadKind::byol_pred, proj_->out_features(), rng));
  target_encoder_ = &add_module("target_encoder", models::make_encoder(encoder_->config(), rng));
  target_proj_ = &add_module("target_projector",
                             std::make_unique<models::Head>(models::HeadKind::byol_proj, encoder_->feature_dim(), rng));
  target_encoder_->copy_state_from(*encoder_);
  target_proj_->copy_state_from(*proj_);
}

std::vector<Tensor> ByolModel::trainable_parameters() const {
  std::vector<Tensor> out = encoder_->parameters();
  for (const auto* m : {static_cast<const nn::Module*>(proj_), static_cast<const nn::Module*>(pred_)}) {
    auto p = m->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Tensor ByolModel::loss(const Tensor& batch, Rng& rng) {
  auto [xa, xb] = two_views(batch, cfg_.transforms, rng);
  Tensor pa = pred_->forward(proj_->forward(encoder_->features(xa, rng), rng), rng);
  Tensor pb = pred_->forward(proj_->forward(encoder_->features(xb, rng), rng), rng);
  Tensor ta, tb;
  {
    nn::NoGradGuard guard;
    ta = target_proj_->forward(target_encoder_->features(xa, rng), rng);
    tb = target_proj_->forward(target_encoder_->features(xb, rng), rng);
  }
  return byol_objective(pa, pb, ta, tb);
}

void ByolModel::after_step() {
  ema_update(*target_encoder_, *encoder_, cfg_.ema_decay);
  ema_update(*target_proj_, *proj_, cfg_.ema_decay);
}

void ema_update(nn::Module& target, const nn::Module& online, double decay) {
  auto t = target.named_parameters();
  auto o = online.named_parameters();
  if (t.size() != o.size()) throw IntegrityError("ema_update: parameter lists differ");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].first != o[i].first || t[i].second.shape() != o[i].second.shape()) {
      throw IntegrityError("ema_update: parameter '" + t[i].first + "' does not match '" + o[i].first + "'");
    }
    auto dst = t[i].second.values();
    auto src = o[i].second.values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = decay * dst[j] + (1.0 - decay) * src[j];
  }
}

void ema_update(ByolState& state) {
  if (!(state.ema_decay > 0.0 && state.ema_decay < 1.0)) throw ValidationError("ema_decay must lie in (0, 1)");
  if (state.target.weights.size() != state.online.weights.size()) throw IntegrityError("online and target manifests differ");
  for (auto& [name, tw] : state.target.weights) {
    auto it = state.online.weights.find(name);
    if (it == state.online.weights.end() || it->second.shape != tw.shape) {
      throw IntegrityError("online and target manifests differ at '" + name + "'");
    }
    for (std::size_t j = 0; j < tw.values.size(); ++j) {
      tw.values[j] = state.ema_decay * tw.values[j] + (1.0 - state.ema_decay) * it->second.values[j];
    }
  }
}

std::unique_ptr<PretextModel> make_pretext_model(const PretextConfig& cfg, Rng& rng) {
  switch (cfg.method) {
    case PretextMethod::multitask: return std::make_unique<MultitaskModel>(cfg, rng);
    case PretextMethod::masked_recon: return std::make_unique<MaskedReconModel>(cfg, rng);
    case PretextMethod::cpc: return std::make_unique<CpcModel>(cfg, rng);
    case PretextMethod::autoencoder: return std::make_unique<AutoencoderModel>(cfg, rng);
    case PretextMethod::simclr: return std::make_unique<SimclrModel>(cfg, rng);
    case PretextMethod::simsiam: return std::make_unique<SimsiamModel>(cfg, rng);
    case PretextMethod::byol: return std::make_unique<ByolModel>(cfg, rng);
  }
  throw ValidationError("unknown pretext method");
}

}  // namespace sslhar::ssl
