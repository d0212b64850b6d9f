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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sslhar/models/encoders.hpp"

namespace sslhar::models {

struct WeightArray {
  nn::Shape shape;
  std::vector<double> values;
};

struct ModelCheckpoint {
  /// Architecture description; "encoder" holds the encoder config.
  Json arch = Json::object();
  std::map<std::string, WeightArray> weights;
  std::string pretext_method;
  Json pretrain_config = Json::object();
  std::uint64_t seed = 0;
};

/// Copies every state array of `m` into `ckpt`, names prefixed by `prefix`.
void capture(ModelCheckpoint& ckpt, const nn::Module& m, const std::string& prefix = "");
/// Overwrites the state of `m`; throws IntegrityError on a missing name or shape mismatch.
void restore(nn::Module& m, const ModelCheckpoint& ckpt, const std::string& prefix = "");

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& dir);
ModelCheckpoint load_checkpoint(const std::filesystem::path& dir);

/// Rebuilds the encoder described by arch["encoder"] and loads the "encoder." weights.
std::unique_ptr<Encoder> load_encoder(const ModelCheckpoint& ckpt);

}  // namespace sslhar::models
