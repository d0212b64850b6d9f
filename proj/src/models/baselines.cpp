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

#include "sslhar/models/baselines.hpp"

#include "sslhar/errors.hpp"

namespace sslhar::models {

namespace {

constexpr int kRecurrentUnits = 128;
constexpr double kRecurrentDropout = 0.2;

}  // namespace

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::deepconvlstm: return "deepconvlstm";
    case BaselineKind::lstm128: return "lstm128";
    case BaselineKind::gru128: return "gru128";
    case BaselineKind::conv_classifier: return "conv_classifier";
  }
  return "conv_classifier";
}

BaselineKind parse_baseline(const std::string& s) {
  for (auto k : {BaselineKind::deepconvlstm, BaselineKind::lstm128, BaselineKind::gru128, BaselineKind::conv_classifier}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown baseline '" + s + "'");
}

Baseline::Baseline(BaselineKind kind, int num_classes, Rng& rng) : kind_(kind) {
  if (num_classes < 1) throw ValidationError("baseline needs num_classes >= 1");
  switch (kind) {
    case BaselineKind::deepconvlstm: {
      std::vector<ConvLayerSpec> layers(4, ConvLayerSpec{64, 5});
      convs_ = &add_module("convs", std::make_unique<ConvStack>(1, layers, 0.0, nn::ConvPadding::valid,
                                                                nn::PadMode::zero, rng));
      feature_width_ = 64 * 3;
      lstm_ = &add_module("lstm", std::make_unique<nn::LSTM>(feature_width_, kRecurrentUnits, 2, 0.0, rng));
      head_ = &add_module("head", std::make_unique<nn::Linear>(kRecurrentUnits, num_classes, rng));
      break;
    }
    case BaselineKind::lstm128:
      feature_width_ = kRecurrentUnits;
      lstm_ = &add_module("lstm", std::make_unique<nn::LSTM>(3, kRecurrentUnits, 1, 0.0, rng));
      head_ = &add_module("head", std::make_unique<nn::Linear>(kRecurrentUnits, num_classes, rng));
      break;
    case BaselineKind::gru128:
      feature_width_ = kRecurrentUnits;
      gru_ = &add_module("gru", std::make_unique<nn::GRU>(3, kRecurrentUnits, 1, 0.0, rng));
      head_ = &add_module("head", std::make_unique<nn::Linear>(kRecurrentUnits, num_classes, rng));
      break;
    case BaselineKind::conv_classifier:
      encoder_ = &add_module("encoder", std::make_unique<ConvEncoder>(ConvEncoderConfig{}, rng));
      feature_width_ = encoder_->feature_dim();
      head_ = &add_module("head", std::make_unique<nn::Linear>(feature_width_, num_classes, rng));
      break;
  }
}

Tensor deepconvlstm_flatten(const Tensor& conv_out, int batch) {
  // [B*3, L', F] -> [B, 3, L', F] -> [B, L', F, 3] -> [B, L', F*3]
  const int Lp = conv_out.dim(1), F = conv_out.dim(2);
  Tensor t = nn::reshape(conv_out, {batch, 3, Lp, F});
  t = nn::permute(t, {0, 2, 3, 1});
  return nn::reshape(t, {batch, Lp, F * 3});
}

Tensor Baseline::deepconvlstm(const Tensor& x, Rng& rng) {
  const int B = x.dim(0), L = x.dim(1);
  if (L < convs_->min_length()) throw ShapeError("deepconvlstm needs L >= " + std::to_string(convs_->min_length()));
  Tensor per_channel = nn::reshape(nn::permute(x, {0, 2, 1}), {B * 3, L, 1});
  Tensor seq = deepconvlstm_flatten(convs_->forward(per_channel, rng), B);
  Tensor h = lstm_->forward(seq, rng);
  return head_->forward(nn::gather_time(h, std::vector<int>(static_cast<std::size_t>(B), h.dim(1) - 1)));
}

Tensor Baseline::forward(const Tensor& x, Rng& rng) {
  if (x.rank() != 3 || x.dim(2) != 3) throw ShapeError("baseline expects [B, L, 3], got " + nn::to_string(x.shape()));
  const int B = x.dim(0);
  switch (kind_) {
    case BaselineKind::deepconvlstm:
      return deepconvlstm(x, rng);
    case BaselineKind::lstm128:
    case BaselineKind::gru128: {
      Tensor h = lstm_ ? lstm_->forward(x, rng) : gru_->forward(x, rng);
      Tensor last = nn::gather_time(h, std::vector<int>(static_cast<std::size_t>(B), h.dim(1) - 1));
      return head_->forward(nn::dropout(last, kRecurrentDropout, training(), rng));
    }
    case BaselineKind::conv_classifier:
      return head_->forward(encoder_->features(x, rng));
  }
  throw ValidationError("unknown baseline");
}

}  // namespace sslhar::models
