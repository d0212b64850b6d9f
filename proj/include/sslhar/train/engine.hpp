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
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sslhar/data/types.hpp"
#include "sslhar/models/baselines.hpp"
#include "sslhar/models/checkpoint.hpp"
#include "sslhar/models/heads.hpp"
#include "sslhar/ssl/methods.hpp"
#include "sslhar/train/hyperparams.hpp"

namespace sslhar::train {

using nn::Tensor;

struct TrainBudget {
  int max_epochs = 50;
  /// Used by pretraining only.
  int early_stop_patience = 5;
  int batch_size = 256;

  void validate() const;
  Json to_json() const;
  static TrainBudget from_json(const Json& j);
};

enum class Schedule { constant, step_decay, cosine, noam };

struct ScheduleExtras {
  int max_epochs = 50;
  int embed_dim = 128;
  int warmup = 4000;
};

/// Epoch-indexed for step_decay and cosine, step-indexed (from 1) for noam.
/// Noam returns base_lr * embed_dim^-0.5 * min(step^-0.5, step * warmup^-1.5).
double lr_at(Schedule schedule, long epoch_or_step, double base_lr, const ScheduleExtras& extras = {});

/// Stops once the monitored loss has not improved for `patience` consecutive epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);
  /// Records one epoch; returns true when it is the new best.
  bool update(double loss);
  bool should_stop() const { return stale_ >= patience_; }
  double best() const { return best_; }
  /// 1-based epoch of the best loss, 0 before any update.
  int best_epoch() const { return best_epoch_; }

 private:
  int patience_;
  int epochs_ = 0;
  int stale_ = 0;
  int best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

enum class OptimizerKind { adam, sgd };

struct OptimizerPlan {
  OptimizerKind optimizer = OptimizerKind::adam;
  Schedule schedule = Schedule::constant;
  double momentum = 0.0;
};

/// Adam for multitask, masked reconstruction (Noam schedule), CPC and the
/// autoencoder; SGD with momentum 0.9 and a cosine schedule for the siamese methods.
OptimizerPlan optimizer_plan(ssl::PretextMethod m);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = std::numeric_limits<double>::quiet_NaN();
  double lr = 0.0;
  Json to_json() const;
};

/// Overrides config fields named in the combo (kernel_size, layers, cpc_k, mask_fraction).
ssl::PretextConfig apply_combo(ssl::PretextConfig base, const HyperparamCombo& combo);

struct PretrainResult {
  models::ModelCheckpoint checkpoint;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool diverged = false;
  std::string diagnostic;
};

PretrainResult pretrain(const ssl::PretextConfig& base, const data::WindowSet& train, const data::WindowSet& val,
                        const HyperparamCombo& combo, const TrainBudget& budget, std::uint64_t seed);
/// Holds out a seeded 10% of the windows (at least one) for validation.
PretrainResult pretrain(ssl::PretextMethod method, const data::WindowSet& ws, const HyperparamCombo& combo,
                        const TrainBudget& budget, std::uint64_t seed);

/// Checkpoint of an untrained model, the random-initialisation reference.
models::ModelCheckpoint initial_checkpoint(const ssl::PretextConfig& cfg, std::uint64_t seed);

/// Frozen encoder plus trainable head.
class Classifier {
 public:
  Classifier(std::unique_ptr<models::Encoder> encoder, std::unique_ptr<models::Head> head, int num_classes);

  /// Eval-mode encoder features [N, F].
  Tensor features(const data::WindowSet& ws) const;
  std::vector<int> predict(const data::WindowSet& ws) const;
  std::vector<int> predict_features(const Tensor& features) const;

  models::Encoder& encoder() const { return *encoder_; }
  models::Head& head() const { return *head_; }
  int num_classes() const { return num_classes_; }

  models::ModelCheckpoint checkpoint() const;
  static Classifier load(const models::ModelCheckpoint& ckpt);

 private:
  std::unique_ptr<models::Encoder> encoder_;
  std::unique_ptr<models::Head> head_;
  int num_classes_;
};

/// Eval-mode features [N, F] of `encoder` over `ws`.
Tensor encode(models::Encoder& encoder, const data::WindowSet& ws);

struct HeadFitResult {
  std::unique_ptr<models::Head> head;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
  bool diverged = false;
};

/// Trains a classifier head on precomputed features with Adam and step decay,
/// keeping the epoch with the best selection F1. Empty `select_labels` selects on
/// the training rows. Combo keys: class_lr, class_weight_decay, class_batch_size.
HeadFitResult fit_head(const Tensor& train_x, std::span<const int> train_labels, const Tensor& select_x,
                       std::span<const int> select_labels, int num_classes, models::HeadKind head_kind,
                       const HyperparamCombo& combo, const TrainBudget& budget, std::uint64_t seed);

struct FinetuneResult {
  std::unique_ptr<Classifier> classifier;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
  bool diverged = false;
};

/// Trains only the head, on features of the frozen encoder stored in `ckpt`.
/// Combo keys: class_lr (default 1e-3), class_weight_decay. The learning
/// rate decays by 0.8 every 10 epochs; the head with the best validation
/// macro F1 is kept. An empty `val` selects on the training set.
FinetuneResult finetune(const models::ModelCheckpoint& ckpt, const data::WindowSet& train,
                        const data::WindowSet& val, models::HeadKind head, const HyperparamCombo& combo,
                        const TrainBudget& budget, std::uint64_t seed);

struct SupervisedResult {
  std::unique_ptr<models::Baseline> model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
  bool diverged = false;
};

/// End-to-end training of a baseline. Combo keys: lr (default 1e-3), weight_decay.
SupervisedResult supervised_train(models::BaselineKind kind, const data::WindowSet& train,
                                  const data::WindowSet& val, const HyperparamCombo& combo,
                                  const TrainBudget& budget, std::uint64_t seed);

std::vector<int> predict(models::Baseline& model, const data::WindowSet& ws);

/// Class count of a labelled set: class_names, else the largest label + 1.
int class_count(const data::WindowSet& ws);

}  // namespace sslhar::train
