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

#include "sslhar/models/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "sslhar/errors.hpp"

namespace sslhar::models {

Tensor make_batch(const data::WindowSet& ws, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ShapeError("make_batch: no windows selected");
  const int L = ws.window_length_samples;
  std::vector<double> values;
  values.reserve(indices.size() * static_cast<std::size_t>(L) * 3);
  for (std::size_t i : indices) {
    const auto& w = ws.windows.at(i).values;
    if (w.rows() != L) throw ShapeError("make_batch: window length mismatch");
    values.insert(values.end(), w.data(), w.data() + w.size());
  }
  return Tensor({static_cast<int>(indices.size()), L, 3}, std::move(values));
}

Tensor make_batch(const std::vector<data::Signal>& signals) {
  if (signals.empty()) throw ShapeError("make_batch: no windows selected");
  const auto L = signals.front().rows();
  std::vector<double> values;
  values.reserve(signals.size() * static_cast<std::size_t>(L) * 3);
  for (const auto& s : signals) {
    if (s.rows() != L) throw ShapeError("make_batch: window length mismatch");
    values.insert(values.end(), s.data(), s.data() + s.size());
  }
  return Tensor({static_cast<int>(signals.size()), static_cast<int>(L), 3}, std::move(values));
}

std::string to_string(nn::ConvPadding p) {
  switch (p) {
    case nn::ConvPadding::valid: return "valid";
    case nn::ConvPadding::same: return "same";
    case nn::ConvPadding::causal: return "causal";
  }
  return "same";
}

nn::ConvPadding parse_padding(const std::string& s) {
  if (s == "valid") return nn::ConvPadding::valid;
  if (s == "same") return nn::ConvPadding::same;
  if (s == "causal") return nn::ConvPadding::causal;
  throw ValidationError("unknown padding '" + s + "'");
}

ConvStack::ConvStack(int in_channels, const std::vector<ConvLayerSpec>& layers, double dropout,
                     nn::ConvPadding padding, nn::PadMode pad_mode, Rng& rng)
    : dropout_(dropout), padding_(padding) {
  if (layers.empty()) throw ValidationError("ConvStack needs at least one layer");
  int in = in_channels;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto conv = std::make_unique<nn::Conv1d>(in, layers[i].filters, layers[i].kernel, padding, pad_mode, rng);
    convs_.push_back(&add_module("conv" + std::to_string(i), std::move(conv)));
    in = layers[i].filters;
  }
}

Tensor ConvStack::forward(const Tensor& x, Rng& rng, std::vector<LayerOutput>* taps) const {
  Tensor h = x;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i]->forward(h);
    if (taps) taps->push_back({"conv" + std::to_string(i), h});
    h = nn::dropout(nn::relu(h), dropout_, training(), rng);
  }
  return h;
}

int ConvStack::min_length() const {
  if (padding_ == nn::ConvPadding::valid) {
    int need = 1;
    for (const auto* c : convs_) need += c->kernel() - 1;
    return need;
  }
  int k = 1;
  for (const auto* c : convs_) k = std::max(k, c->kernel());
  return k;
}

void Encoder::check_input(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(2) != 3) throw ShapeError(kind() + " encoder expects [B, L, 3], got " + nn::to_string(x.shape()));
  if (x.dim(1) < min_length()) {
    throw ShapeError(kind() + " encoder needs L >= " + std::to_string(min_length()) + ", got " +
                     std::to_string(x.dim(1)));
  }
}

namespace {

Tensor last_step(const Tensor& seq) {
  return nn::gather_time(seq, std::vector<int>(static_cast<std::size_t>(seq.dim(0)), seq.dim(1) - 1));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

void ConvEncoderConfig::validate() const {
  require(!filters.empty() && filters.size() == kernels.size(), "conv encoder: filters and kernels must align");
  for (std::size_t i = 0; i < filters.size(); ++i) require(filters[i] > 0 && kernels[i] > 0, "conv encoder: sizes must be positive");
  if (extra_block) require(extra_block->filters > 0 && extra_block->kernel > 0, "conv encoder: invalid extra block");
  require(dropout >= 0.0 && dropout < 1.0, "conv encoder: dropout must lie in [0, 1)");
}

std::vector<ConvLayerSpec> ConvEncoderConfig::layers() const {
  std::vector<ConvLayerSpec> out;
  for (std::size_t i = 0; i < filters.size(); ++i) out.push_back({filters[i], kernels[i]});
  if (extra_block) out.push_back(*extra_block);
  return out;
}

int ConvEncoderConfig::feature_dim() const { return extra_block ? extra_block->filters : filters.back(); }

ConvEncoder::ConvEncoder(const ConvEncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  stack_ = &add_module("convs", std::make_unique<ConvStack>(3, cfg_.layers(), cfg_.dropout, cfg_.padding,
                                                            nn::PadMode::zero, rng));
}

Json ConvEncoder::config() const {
  Json j = {{"kind", "conv"},          {"filters", cfg_.filters},
            {"kernels", cfg_.kernels}, {"dropout", cfg_.dropout},
            {"global_max_pool", cfg_.global_max_pool}, {"padding", to_string(cfg_.padding)}};
  if (cfg_.extra_block) j["extra_block"] = {{"filters", cfg_.extra_block->filters}, {"kernel", cfg_.extra_block->kernel}};
  return j;
}

Tensor ConvEncoder::sequence(const Tensor& x, Rng& rng, std::vector<LayerOutput>* taps) {
  check_input(x);
  return stack_->forward(x, rng, taps);
}

Tensor ConvEncoder::features(const Tensor& x, Rng& rng) {
  Tensor h = sequence(x, rng);
  return cfg_.global_max_pool ? nn::max_over_time(h) : nn::mean_over_time(h);
}

std::vector<LayerOutput> ConvEncoder::layer_outputs(const Tensor& x, Rng& rng) {
  std::vector<LayerOutput> taps;
  sequence(x, rng, &taps);
  return taps;
}

ConvEncoderConfig conv_config_from_json(const Json& j) {
  ConvEncoderConfig c;
  c.filters = j.value("filters", c.filters);
  c.kernels = j.value("kernels", c.kernels);
  c.dropout = j.value("dropout", c.dropout);
  c.global_max_pool = j.value("global_max_pool", c.global_max_pool);
  c.padding = parse_padding(j.value("padding", to_string(c.padding)));
  if (j.contains("extra_block") && !j["extra_block"].is_null()) {
    c.extra_block = ConvLayerSpec{j["extra_block"].at("filters").get<int>(), j["extra_block"].at("kernel").get<int>()};
  }
  return c;
}

void CpcEncoderConfig::validate() const {
  require(!filters.empty(), "cpc encoder: filters must not be empty");
  require(kernel > 0 && gru_units > 0 && gru_layers > 0, "cpc encoder: sizes must be positive");
  require(padding != nn::ConvPadding::valid, "cpc encoder: conv stack must preserve length");
  require(dropout >= 0.0 && dropout < 1.0, "cpc encoder: dropout must lie in [0, 1)");
}

CpcEncoder::CpcEncoder(const CpcEncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  std::vector<ConvLayerSpec> layers;
  for (int f : cfg_.filters) layers.push_back({f, cfg_.kernel});
  stack_ = &add_module("convs", std::make_unique<ConvStack>(3, layers, cfg_.dropout, cfg_.padding,
                                                            nn::PadMode::reflect, rng));
  gru_ = &add_module("gru", std::make_unique<nn::GRU>(cfg_.filters.back(), cfg_.gru_units, cfg_.gru_layers,
                                                      cfg_.dropout, rng));
}

Json CpcEncoder::config() const {
  return {{"kind", "cpc"},
          {"filters", cfg_.filters},
          {"kernel", cfg_.kernel},
          {"dropout", cfg_.dropout},
          {"gru_units", cfg_.gru_units},
          {"gru_layers", cfg_.gru_layers},
          {"padding", to_string(cfg_.padding)}};
}

CpcEncoder::Output CpcEncoder::forward(const Tensor& x, Rng& rng, int context_steps, std::vector<LayerOutput>* taps) {
  check_input(x);
  Output out;
  out.latents = stack_->forward(x, rng, taps);
  out.context = gru_->forward(out.latents, rng, context_steps);
  if (taps) taps->push_back({"gru", out.context});
  return out;
}

Tensor CpcEncoder::features(const Tensor& x, Rng& rng) { return last_step(forward(x, rng).context); }

std::vector<LayerOutput> CpcEncoder::layer_outputs(const Tensor& x, Rng& rng) {
  std::vector<LayerOutput> taps;
  forward(x, rng, -1, &taps);
  return taps;
}

Tensor CpcEncoder::pca_features(const Tensor& x, Rng& rng) {
  check_input(x);
  return nn::mean_over_time(stack_->forward(x, rng));
}

CpcEncoderConfig cpc_config_from_json(const Json& j) {
  CpcEncoderConfig c;
  c.filters = j.value("filters", c.filters);
  c.kernel = j.value("kernel", c.kernel);
  c.dropout = j.value("dropout", c.dropout);
  c.gru_units = j.value("gru_units", c.gru_units);
  c.gru_layers = j.value("gru_layers", c.gru_layers);
  c.padding = parse_padding(j.value("padding", to_string(c.padding)));
  return c;
}

void TransformerEncoderConfig::validate() const {
  require(embed_dim > 0 && heads > 0 && layers > 0 && ffn_dim > 0, "transformer: sizes must be positive");
  require(embed_dim % heads == 0, "transformer: embed_dim must be divisible by heads");
  require(dropout >= 0.0 && dropout < 1.0, "transformer: dropout must lie in [0, 1)");
}

std::vector<double> sinusoidal_positions(int length, int dim) {
  std::vector<double> pe(static_cast<std::size_t>(length) * static_cast<std::size_t>(dim));
  for (int t = 0; t < length; ++t) {
    for (int i = 0; i < dim; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / dim);
      pe[static_cast<std::size_t>(t) * dim + i] = std::sin(t * freq);
      if (i + 1 < dim) pe[static_cast<std::size_t>(t) * dim + i + 1] = std::cos(t * freq);
    }
  }
  return pe;
}

TransformerEncoder::TransformerEncoder(const TransformerEncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  embed_ = &add_module("embed", std::make_unique<nn::Conv1d>(3, cfg_.embed_dim, 1, nn::ConvPadding::valid,
                                                             nn::PadMode::zero, rng));
  for (int l = 0; l < cfg_.layers; ++l) {
    layers_.push_back(&add_module("layer" + std::to_string(l),
                                  std::make_unique<nn::TransformerLayer>(cfg_.embed_dim, cfg_.heads, cfg_.ffn_dim,
                                                                         cfg_.dropout, rng)));
  }
}

Json TransformerEncoder::config() const {
  return {{"kind", "transformer"},      {"embed_dim", cfg_.embed_dim}, {"heads", cfg_.heads},
          {"layers", cfg_.layers},      {"ffn_dim", cfg_.ffn_dim},     {"dropout", cfg_.dropout},
          {"positional", cfg_.positional}};
}

Tensor TransformerEncoder::forward(const Tensor& x, Rng& rng, std::vector<LayerOutput>* taps) {
  check_input(x);
  const int B = x.dim(0), L = x.dim(1), D = cfg_.embed_dim;
  Tensor h = embed_->forward(x);
  if (cfg_.positional) {
    const std::vector<double> pe = sinusoidal_positions(L, D);
    std::vector<double> tiled;
    tiled.reserve(pe.size() * static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) tiled.insert(tiled.end(), pe.begin(), pe.end());
    h = nn::add(h, Tensor({B, L, D}, std::move(tiled)));
  }
  if (taps) taps->push_back({"embed", h});
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l]->forward(h, rng);
    if (taps) taps->push_back({"layer" + std::to_string(l), h});
  }
  return h;
}

Tensor TransformerEncoder::features(const Tensor& x, Rng& rng) { return nn::mean_over_time(forward(x, rng)); }

std::vector<LayerOutput> TransformerEncoder::layer_outputs(const Tensor& x, Rng& rng) {
  std::vector<LayerOutput> taps;
  forward(x, rng, &taps);
  return taps;
}

TransformerEncoderConfig transformer_config_from_json(const Json& j) {
  TransformerEncoderConfig c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.heads = j.value("heads", c.heads);
  c.layers = j.value("layers", c.layers);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.dropout = j.value("dropout", c.dropout);
  c.positional = j.value("positional", c.positional);
  return c;
}

void AutoencoderConfig::validate() const {
  require(!filters.empty() && kernel > 0, "autoencoder: invalid geometry");
  require(dropout >= 0.0 && dropout < 1.0, "autoencoder: dropout must lie in [0, 1)");
}

AutoencoderEncoder::AutoencoderEncoder(const AutoencoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  std::vector<ConvLayerSpec> layers;
  for (int f : cfg_.filters) layers.push_back({f, cfg_.kernel});
  stack_ = &add_module("convs", std::make_unique<ConvStack>(3, layers, cfg_.dropout, nn::ConvPadding::same,
                                                            nn::PadMode::reflect, rng));
}

Json AutoencoderEncoder::config() const {
  return {{"kind", "autoencoder"}, {"filters", cfg_.filters}, {"kernel", cfg_.kernel}, {"dropout", cfg_.dropout}};
}

Tensor AutoencoderEncoder::latent(const Tensor& x, Rng& rng, std::vector<LayerOutput>* taps) {
  check_input(x);
  return stack_->forward(x, rng, taps);
}

Tensor AutoencoderEncoder::features(const Tensor& x, Rng& rng) { return nn::max_over_time(latent(x, rng)); }

std::vector<LayerOutput> AutoencoderEncoder::layer_outputs(const Tensor& x, Rng& rng) {
  std::vector<LayerOutput> taps;
  latent(x, rng, &taps);
  return taps;
}

AutoencoderConfig autoencoder_config_from_json(const Json& j) {
  AutoencoderConfig c;
  c.filters = j.value("filters", c.filters);
  c.kernel = j.value("kernel", c.kernel);
  c.dropout = j.value("dropout", c.dropout);
  return c;
}

Decoder::Decoder(const AutoencoderConfig& cfg, Rng& rng) : kernel_(cfg.kernel) {
  cfg.validate();
  std::vector<ConvLayerSpec> layers;
  for (auto it = cfg.filters.rbegin(); it != cfg.filters.rend(); ++it) layers.push_back({*it, cfg.kernel});
  stack_ = &add_module("convs", std::make_unique<ConvStack>(cfg.filters.back(), layers, cfg.dropout,
                                                            nn::ConvPadding::same, nn::PadMode::reflect, rng));
  out_ = &add_module("out", std::make_unique<nn::Linear>(cfg.filters.front(), 3, rng));
}

Tensor Decoder::forward(const Tensor& latent, Rng& rng) const { return out_->forward(stack_->forward(latent, rng)); }

std::unique_ptr<Encoder> make_encoder(const Json& cfg, Rng& rng) {
  const std::string kind = cfg.value("kind", std::string("conv"));
  if (kind == "conv") return std::make_unique<ConvEncoder>(conv_config_from_json(cfg), rng);
  if (kind == "cpc") return std::make_unique<CpcEncoder>(cpc_config_from_json(cfg), rng);
  if (kind == "transformer") return std::make_unique<TransformerEncoder>(transformer_config_from_json(cfg), rng);
  if (kind == "autoencoder") return std::make_unique<AutoencoderEncoder>(autoencoder_config_from_json(cfg), rng);
  throw ValidationError("unknown encoder kind '" + kind + "'");
}

}  // namespace sslhar::models
