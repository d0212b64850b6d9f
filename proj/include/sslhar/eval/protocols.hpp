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
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sslhar/data/types.hpp"

namespace sslhar::eval {

using Json = nlohmann::json;

enum class Criterion {
  position_transfer,
  activity_transfer,
  rate_mismatch,
  user_quantity,
  window_quantity,
  source_imbalance,
  limited_labels,
  norm_source_ablation,
  feature_space
};

inline constexpr std::array<Criterion, 9> kAllCriteria{
    Criterion::position_transfer, Criterion::activity_transfer, Criterion::rate_mismatch,
    Criterion::user_quantity,     Criterion::window_quantity,   Criterion::source_imbalance,
    Criterion::limited_labels,    Criterion::norm_source_ablation, Criterion::feature_space};

std::string to_string(Criterion c);
Criterion parse_criterion(const std::string& s);

/// Criterion plus its parameters, e.g. {"pct": 10} for user_quantity.
struct ProtocolConfig {
  Criterion criterion = Criterion::position_transfer;
  Json parameters = Json::object();

  /// Checks the parameter names and ranges the criterion needs.
  void validate() const;
  Json to_json() const;
  static ProtocolConfig from_json(const Json& j);
};

struct ImbalanceSpec {
  double rho = 0.01;
  int majority_count = 20000;
  int num_classes = 6;

  void validate() const;
};

/// Per-rank counts round(majority * exp(beta * (c - 1))), beta = ln(rho) / (C - 1),
/// rounding half to even. Rank 1 is the majority class.
std::vector<int> imbalance_counts(const ImbalanceSpec& spec);

struct ImbalanceResult {
  data::WindowSet imbalanced;
  data::WindowSet balanced;
  /// Class id holding each rank.
  std::vector<int> class_order;
  std::vector<int> counts;
  int balanced_per_class = 0;
  /// Set when a class had too few windows and was drawn with replacement.
  bool with_replacement = false;
  std::vector<std::string> log;
};

/// Draws the imbalanced subset and its balanced counterpart of equal size
/// from `pool`; class ranks are assigned in a seeded random order.
ImbalanceResult imbalance_subsets(const data::WindowSet& pool, const ImbalanceSpec& spec, std::uint64_t seed);

/// floor(pct * n / 100), at least 1.
std::size_t subsample_count(std::size_t n, double pct);

/// Uniform draw of users without replacement, returned sorted.
std::vector<std::string> subsample_users(const std::vector<std::string>& users, double pct, std::uint64_t seed);

/// Uniform draw of windows without replacement across all users, in original order.
data::WindowSet subsample_windows(const data::WindowSet& ws, double pct, std::uint64_t seed);

/// Up to `n_per_class` windows of every labelled class; shortfalls go to `log`.
data::WindowSet limited_label_subset(const data::WindowSet& train, int n_per_class, std::uint64_t seed,
                                     std::vector<std::string>* log = nullptr);

/// Windows at the native rate (`use_native`) or after resampling to `target_hz`,
/// both `window_length` samples long.
data::WindowSet rate_mismatch_variant(const data::Dataset& ds, bool use_native, int window_length = 100,
                                      double overlap = 0.5, double target_hz = 50.0);

enum class NormSource { source, target };

NormSource parse_norm_source(const std::string& s);
std::string to_string(NormSource m);

/// Normalizes raw target windows with the source statistics or with their own.
data::WindowSet norm_ablation(const data::WindowSet& target, const data::ChannelStats& source_stats, NormSource mode);

}  // namespace sslhar::eval
