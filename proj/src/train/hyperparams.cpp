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

#include "sslhar/train/hyperparams.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <unordered_set>

#include "sslhar/errors.hpp"
#include "sslhar/random.hpp"

namespace sslhar::train {

void HyperparamSpace::validate() const {
  if (values.empty()) throw ValidationError("hyperparameter space is empty");
  for (const auto& [name, list] : values) {
    if (list.empty()) throw ValidationError("hyperparameter '" + name + "' has no values");
  }
}

std::uint64_t HyperparamSpace::size() const {
  validate();
  std::uint64_t n = 1;
  for (const auto& [name, list] : values) {
    if (n > std::numeric_limits<std::uint64_t>::max() / list.size()) {
      throw ValidationError("hyperparameter space is too large");
    }
    n *= list.size();
  }
  return n;
}

std::map<std::string, Json> HyperparamSpace::at(std::uint64_t index) const {
  if (index >= size()) throw ValidationError("combo index out of range");
  std::map<std::string, Json> out;
  for (auto it = values.rbegin(); it != values.rend(); ++it) {
    const auto radix = it->second.size();
    out[it->first] = it->second[index % radix];
    index /= radix;
  }
  return out;
}

HyperparamSpace HyperparamSpace::merged(const HyperparamSpace& other) const {
  HyperparamSpace out = *this;
  for (const auto& [name, list] : other.values) {
    if (!out.values.emplace(name, list).second) {
      throw ValidationError("hyperparameter '" + name + "' defined twice");
    }
  }
  return out;
}

double HyperparamCombo::number(const std::string& name, double fallback) const {
  auto it = values.find(name);
  return it == values.end() ? fallback : it->second.get<double>();
}

int HyperparamCombo::integer(const std::string& name, int fallback) const {
  auto it = values.find(name);
  return it == values.end() ? fallback : it->second.get<int>();
}

std::string HyperparamCombo::key() const { return Json(values).dump(); }

Json HyperparamCombo::to_json() const { return {{"values", values}, {"draw_seed", draw_seed}}; }

HyperparamCombo HyperparamCombo::from_json(const Json& j) {
  HyperparamCombo c;
  c.values = j.at("values").get<std::map<std::string, Json>>();
  c.draw_seed = j.value("draw_seed", std::uint64_t{0});
  return c;
}

void HyperparamCombo::check_in(const HyperparamSpace& space) const {
  for (const auto& [name, v] : values) {
    auto it = space.values.find(name);
    if (it == space.values.end()) throw ValidationError("hyperparameter '" + name + "' is not in the space");
    if (std::find(it->second.begin(), it->second.end(), v) == it->second.end()) {
      throw ValidationError("value " + v.dump() + " is not allowed for '" + name + "'");
    }
  }
}

std::vector<HyperparamCombo> draw_combos(const HyperparamSpace& space, int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("draw_combos needs n >= 1");
  const std::uint64_t total = space.size();
  std::vector<std::uint64_t> picks;
  if (total <= static_cast<std::uint64_t>(n)) {
    for (std::uint64_t i = 0; i < total; ++i) picks.push_back(i);
  } else {
    // Floyd's sampling keeps memory proportional to n.
    Rng rng(seed);
    std::unordered_set<std::uint64_t> chosen;
    for (std::uint64_t j = total - n; j < total; ++j) {
      const std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng.engine());
      const std::uint64_t pick = chosen.count(t) ? j : t;
      chosen.insert(pick);
      picks.push_back(pick);
    }
  }
  std::vector<HyperparamCombo> out;
  out.reserve(picks.size());
  for (std::size_t i = 0; i < picks.size(); ++i) {
    out.push_back({space.at(picks[i]), mix_seed(seed, i)});
  }
  return out;
}

namespace {

std::vector<Json> list(std::initializer_list<double> xs) { return {xs.begin(), xs.end()}; }
std::vector<Json> ints(std::initializer_list<int> xs) { return {xs.begin(), xs.end()}; }

const std::vector<Json>& wide_lr() {
  static const auto v = list({1e-2, 5e-2, 1e-3, 5e-3, 1e-4, 5e-4, 1e-5});
  return v;
}
const std::vector<Json>& small_l2() {
  static const auto v = list({0.0, 1e-4, 1e-5});
  return v;
}

}  // namespace

HyperparamSpace pretrain_space(ssl::PretextMethod m) {
  using ssl::PretextMethod;
  switch (m) {
    case PretextMethod::multitask:
      return {{{"lr", list({1e-4, 3e-4, 5e-4})}, {"weight_decay", list({1e-4, 3e-4, 5e-4})}}};
    case PretextMethod::masked_recon:
      return {{{"layers", ints({2, 3, 4, 5, 6})},
               {"warmup", ints({20000, 40000, 60000, 80000, 100000})},
               {"mask_fraction", list({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7})}}};
    case PretextMethod::cpc:
      return {{{"lr", list({1e-3, 5e-4, 1e-4})},
               {"weight_decay", small_l2()},
               {"kernel_size", ints({3, 5})},
               {"batch_size", ints({64, 128, 256})},
               {"cpc_k", ints({32, 48, 64})}}};
    case PretextMethod::autoencoder:
      return {{{"lr", list({1e-3, 5e-4, 1e-4})},
               {"weight_decay", small_l2()},
               {"kernel_size", ints({3, 5, 7, 9, 11})}}};
    case PretextMethod::simclr:
      return {{{"lr", list({1e-2, 1e-3, 5e-3, 1e-4})},
               {"weight_decay", small_l2()},
               {"batch_size", ints({1024, 2048, 4096})}}};
    case PretextMethod::simsiam:
      return {{{"lr", wide_lr()}, {"weight_decay", small_l2()}, {"batch_size", ints({128, 256, 512})}}};
    case PretextMethod::byol:
      return {{{"lr", wide_lr()}, {"weight_decay", small_l2()}, {"batch_size", ints({512, 1024, 2048, 4096})}}};
  }
  throw ValidationError("unknown pretext method");
}

HyperparamSpace classifier_space(ssl::PretextMethod m) {
  if (m == ssl::PretextMethod::multitask) {
    return {{{"class_lr", list({1e-4, 3e-4, 5e-4})}, {"class_weight_decay", list({1e-4, 3e-4, 5e-4})}}};
  }
  return {{{"class_lr", list({1e-4, 5e-4, 1e-5})}, {"class_weight_decay", small_l2()}}};
}

HyperparamSpace finetune_space(ssl::PretextMethod m) { return pretrain_space(m).merged(classifier_space(m)); }

HyperparamSpace baseline_space(models::BaselineKind) {
  return {{{"lr", list({1e-3, 5e-4, 1e-4})}, {"weight_decay", small_l2()}}};
}

}  // namespace sslhar::train
