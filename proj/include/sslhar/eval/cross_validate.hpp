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
#include <functional>
#include <string>
#include <vector>

#include "sslhar/data/types.hpp"
#include "sslhar/eval/metrics.hpp"
#include "sslhar/results/store.hpp"
#include "sslhar/train/engine.hpp"

namespace sslhar::eval {

using Json = nlohmann::json;

/// What a run trains: a pretext method, a supervised baseline, or an
/// untrained encoder probed as the random-initialisation reference.
struct MethodSpec {
  enum class Kind { pretext, baseline, random_init };
  Kind kind = Kind::pretext;
  ssl::PretextMethod pretext = ssl::PretextMethod::multitask;
  models::BaselineKind baseline = models::BaselineKind::conv_classifier;
  /// Encoder override for pretext and random_init runs; null keeps the default.
  Json encoder = nullptr;

  /// "simclr", "gru128", "random_init:simclr", ...
  std::string name() const;
  /// Accepts the names produced by name(); "random_init" alone uses the conv encoder.
  static MethodSpec parse(const std::string& name);
  ssl::PretextConfig pretext_config() const;
};

struct CvConfig {
  MethodSpec method;
  models::HeadKind head = models::HeadKind::linear;
  train::TrainBudget pretrain_budget;
  train::TrainBudget finetune_budget;
  /// Seeds of the final re-runs of the best combo. A re-run whose seed equals
  /// the search seed is the search run itself and is not trained again.
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  /// Seed shared by every run of the search stage.
  std::uint64_t search_seed = 0;
  std::string criterion = "position_transfer";
  /// Protocol parameters copied into every record's tags.
  Json protocol_tags = Json::object();
  /// Optional reduction of each fold's training windows (e.g. limited labels).
  std::function<data::WindowSet(const data::WindowSet&, std::uint64_t seed)> train_filter;
  /// Concurrent runs; each worker owns its models and data views.
  int workers = 1;
};

struct CvSummary {
  /// Search records (combo-major, fold-minor), then final records (seed-major, fold-minor).
  std::vector<results::RunRecord> records;
  /// Classifier runs executed in this call; records already in the store, or
  /// produced earlier in the call, are reused.
  std::size_t trained = 0;
  std::size_t pretrained = 0;
  int best_combo = -1;
  /// Mean test macro F1 per combo over the folds; failed combos hold -1.
  std::vector<double> combo_mean_f1;
  /// Mean and population std over seeds of the per-seed fold-mean F1.
  MeanStd final_f1;
};

/// Random search with user-fold cross validation on `target`, pretraining on
/// `source`: combos x folds search runs, then the best combo re-run for every
/// seed across all folds. With a store, completed runs are skipped.
CvSummary cross_validate(const CvConfig& cfg, const data::WindowSet& source, const data::WindowSet& target,
                         const data::FoldPlan& folds, const std::vector<train::HyperparamCombo>& combos,
                         results::ResultStore* store = nullptr);

/// Search combos for `method`. Pretext methods first draw `n_pretrain` pretext
/// combos, then `n_finetune` (pretext combo, classifier combo) pairs without
/// replacement; other kinds draw `n_finetune` classifier or baseline combos.
std::vector<train::HyperparamCombo> search_combos(const MethodSpec& method, std::size_t n_pretrain,
                                                  std::size_t n_finetune, std::uint64_t seed);

/// Pretext part of a combo (every key not starting with "class_").
train::HyperparamCombo pretext_part(const train::HyperparamCombo& combo);

/// Seeded 10% validation hold-out (at least 2 windows) for pretraining.
std::pair<data::WindowSet, data::WindowSet> pretrain_split(const data::WindowSet& ws, std::uint64_t seed);

}  // namespace sslhar::eval
