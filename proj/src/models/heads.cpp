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

#include "sslhar/models/heads.hpp"

#include "sslhar/errors.hpp"

namespace sslhar::models {

std::string to_string(HeadKind k) {
  switch (k) {
    case HeadKind::linear: return "linear";
    case HeadKind::mlp256_128: return "mlp256_128";
    case HeadKind::simclr_proj: return "simclr_proj";
    case HeadKind::simsiam_proj: return "simsiam_proj";
    case HeadKind::simsiam_pred: return "simsiam_pred";
    case HeadKind::byol_proj: return "byol_proj";
    case HeadKind::byol_pred: return "byol_pred";
  }
  return "linear";
}

HeadKind parse_head(const std::string& s) {
  for (auto k : {HeadKind::linear, HeadKind::mlp256_128, HeadKind::simclr_proj, HeadKind::simsiam_proj,
                 HeadKind::simsiam_pred, HeadKind::byol_proj, HeadKind::byol_pred}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown head kind '" + s + "'");
}

Head::Head(HeadKind kind, int in_features, Rng& rng, int num_classes) : kind_(kind), in_(in_features) {
  if (in_features < 1) throw ValidationError("head input width must be positive");
  const bool classifier = kind == HeadKind::linear || kind == HeadKind::mlp256_128;
  if (classifier && num_classes < 1) throw ValidationError("classifier head needs num_classes >= 1");
  switch (kind) {
    case HeadKind::linear:
      add_layer(in_features, num_classes, false, false, 0.0, rng);
      break;
    case HeadKind::mlp256_128:
      add_layer(in_features, 256, true, true, 0.2, rng);
      add_layer(256, 128, true, true, 0.2, rng);
      add_layer(128, num_classes, false, false, 0.0, rng);
      break;
    case HeadKind::simclr_proj:
      add_layer(in_features, 256, false, true, 0.0, rng);
      add_layer(256, 128, false, true, 0.0, rng);
      add_layer(128, 50, false, false, 0.0, rng);
      break;
    case HeadKind::simsiam_proj:
      add_layer(in_features, 128, true, true, 0.0, rng);
      add_layer(128, 128, true, true, 0.0, rng);
      add_layer(128, 96, true, true, 0.0, rng);
      break;
    case HeadKind::simsiam_pred:
      add_layer(in_features, 64, true, true, 0.0, rng);
      add_layer(64, 96, false, false, 0.0, rng);
      break;
    case HeadKind::byol_proj:
      add_layer(in_features, 256, true, true, 0.0, rng);
      add_layer(256, 64, false, false, 0.0, rng);
      break;
    case HeadKind::byol_pred:
      add_layer(in_features, 128, true, true, 0.0, rng);
      add_layer(128, 64, false, false, 0.0, rng);
      break;
  }
  out_ = layers_.back().linear->out_features();
}

void Head::add_layer(int in, int out, bool norm, bool relu, double dropout, Rng& rng) {
  const std::string idx = std::to_string(layers_.size());
  Layer l;
  l.linear = &add_module("fc" + idx, std::make_unique<nn::Linear>(in, out, rng));
  if (norm) l.norm = &add_module("bn" + idx, std::make_unique<nn::BatchNorm1d>(out));
  l.relu = relu;
  l.dropout = dropout;
  layers_.push_back(l);
}

Tensor Head::forward(const Tensor& x, Rng& rng) {
  if (x.rank() != 2 || x.dim(1) != in_) {
    throw ShapeError(to_string(kind_) + " head expects [N, " + std::to_string(in_) + "], got " + nn::to_string(x.shape()));
  }
  Tensor h = x;
  for (auto& l : layers_) {
    h = l.linear->forward(h);
    if (l.norm) h = l.norm->forward(h);
    if (l.relu) h = nn::relu(h);
    if (l.dropout > 0.0) h = nn::dropout(h, l.dropout, training(), rng);
  }
  return h;
}

Tensor classifier_forward(Head& head, const Tensor& features, Rng& rng) {
  if (head.kind() != HeadKind::linear && head.kind() != HeadKind::mlp256_128) {
    throw ValidationError("classifier_forward needs a linear or mlp256_128 head");
  }
  return head.forward(features, rng);
}

}  // namespace sslhar::models
