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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sslhar/data/synthetic.hpp"
#include "sslhar/eval/cross_validate.hpp"
#include "sslhar/eval/protocols.hpp"
#include "sslhar/results/store.hpp"

namespace sslhar::results {

using Json = nlohmann::json;

Json synthetic_spec_to_json(const data::SyntheticSpec& spec);
/// Missing fields keep their defaults; unknown fields are a SchemaError.
data::SyntheticSpec synthetic_spec_from_json(const Json& j);

/// A dataset directory or a generated synthetic dataset.
struct DataSource {
  std::filesystem::path path;
  std::optional<data::SyntheticSpec> synthetic;

  data::Dataset load() const;
  Json to_json() const;
  /// {"path": "..."} or {"synthetic": {...}}.
  static DataSource from_json(const Json& j);
};

struct ExperimentConfig {
  /// Names accepted by eval::MethodSpec::parse.
  std::vector<std::string> methods;
  DataSource source;
  DataSource target;
  eval::ProtocolConfig protocol;
  int window_length = 100;
  double source_overlap = 0.0;
  double target_overlap = 0.5;
  double rate_hz = 50.0;
  train::TrainBudget pretrain_budget;
  train::TrainBudget finetune_budget;
  std::size_t pretrain_combos = 20;
  std::size_t finetune_combos = 50;
  int folds = 5;
  double val_fraction = 0.2;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::uint64_t seed = 0;
  std::string head = "linear";
  /// Encoder overrides keyed by pretext method name.
  Json encoders = Json::object();
  /// Fixed combo for the feature-space analyses.
  Json analysis_combo = Json::object();
  std::size_t probe_windows = 1000;
  std::filesystem::path out_dir = "runs";
  int workers = 1;

  /// Throws ValidationError (or SchemaError) before any data is read.
  void validate() const;
  Json to_json() const;
  static ExperimentConfig from_json(const Json& j);
};

struct ExperimentResult {
  std::vector<RunRecord> records;
  std::vector<eval::CvSummary> summaries;
  std::size_t trained = 0;
  std::size_t pretrained = 0;
};

/// Prepared source and target windows for one protocol.
struct ProtocolData {
  data::WindowSet source;
  data::WindowSet target;
  /// Limited-label reduction of each fold's training windows, if any.
  std::function<data::WindowSet(const data::WindowSet&, std::uint64_t)> train_filter;
  std::vector<std::string> log;
};

ProtocolData prepare_protocol(const ExperimentConfig& cfg);

/// Runs every method under the configured protocol, appending to `store`;
/// runs already in the store are read back instead of re-trained.
ExperimentResult run(const ExperimentConfig& cfg, ResultStore& store);

}  // namespace sslhar::results
