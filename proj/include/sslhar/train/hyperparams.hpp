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
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "sslhar/models/baselines.hpp"
#include "sslhar/ssl/methods.hpp"

namespace sslhar::train {

using Json = nlohmann::json;

/// Parameter name -> candidate values.
struct HyperparamSpace {
  std::map<std::string, std::vector<Json>> values;

  void validate() const;
  /// Size of the Cartesian product.
  std::uint64_t size() const;
  /// Mixed-radix decoding of `index`, last parameter varying fastest.
  std::map<std::string, Json> at(std::uint64_t index) const;
  /// Union of two spaces; a name present in both throws ValidationError.
  HyperparamSpace merged(const HyperparamSpace& other) const;
};

struct HyperparamCombo {
  std::map<std::string, Json> values;
  std::uint64_t draw_seed = 0;

  bool has(const std::string& name) const { return values.count(name) != 0; }
  double number(const std::string& name, double fallback) const;
  int integer(const std::string& name, int fallback) const;
  /// Canonical text form; equal combos give equal keys.
  std::string key() const;
  Json to_json() const;
  static HyperparamCombo from_json(const Json& j);
  /// Throws ValidationError if a value is absent from its list in `space`.
  void check_in(const HyperparamSpace& space) const;
};

/// Full grid when the space holds at most `n` combos, otherwise `n` distinct
/// uniform draws without replacement.
std::vector<HyperparamCombo> draw_combos(const HyperparamSpace& space, int n, std::uint64_t seed);

HyperparamSpace pretrain_space(ssl::PretextMethod m);
/// Classifier learning rate and L2 ("class_lr", "class_weight_decay").
HyperparamSpace classifier_space(ssl::PretextMethod m);
/// Pretext and classifier parameters searched jointly for activity recognition.
HyperparamSpace finetune_space(ssl::PretextMethod m);
HyperparamSpace baseline_space(models::BaselineKind k);

}  // namespace sslhar::train
