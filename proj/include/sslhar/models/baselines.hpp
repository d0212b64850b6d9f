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

#include "sslhar/models/encoders.hpp"
#include "sslhar/models/heads.hpp"

namespace sslhar::models {

enum class BaselineKind { deepconvlstm, lstm128, gru128, conv_classifier };

std::string to_string(BaselineKind k);
BaselineKind parse_baseline(const std::string& s);

/// End-to-end supervised network mapping [B, L, 3] windows to logits.
class Baseline : public nn::Module {
 public:
  Baseline(BaselineKind kind, int num_classes, Rng& rng);
  Tensor forward(const Tensor& x, Rng& rng);
  BaselineKind kind() const { return kind_; }
  /// Width of the recurrent input (deepconvlstm) or head input.
  int feature_width() const { return feature_width_; }

 private:
  Tensor deepconvlstm(const Tensor& x, Rng& rng);

  BaselineKind kind_;
  int feature_width_ = 0;
  ConvStack* convs_ = nullptr;
  nn::LSTM* lstm_ = nullptr;
  nn::GRU* gru_ = nullptr;
  ConvEncoder* encoder_ = nullptr;
  nn::Linear* head_ = nullptr;
};

/// Per-sensor-channel 5x1 filters are flattened filter-major: feature index f * 3 + c.
Tensor deepconvlstm_flatten(const Tensor& conv_out, int batch);

}  // namespace sslhar::models
