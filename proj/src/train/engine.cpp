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

#include "sslhar/train/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sslhar/errors.hpp"
#include "sslhar/eval/metrics.hpp"
#include "sslhar/nn/optim.hpp"

namespace sslhar::train {

using models::ModelCheckpoint;

void TrainBudget::validate() const {
  if (max_epochs < 1) throw ValidationError("max_epochs must be positive");
  if (early_stop_patience < 1 || early_stop_patience >= max_epochs) {
    throw ValidationError("early_stop_patience must lie in [1, max_epochs)");
  }
  if (batch_size < 1) throw ValidationError("batch_size must be positive");
}

Json TrainBudget::to_json() const {
  return {{"max_epochs", max_epochs}, {"early_stop_patience", early_stop_patience}, {"batch_size", batch_size}};
}

TrainBudget TrainBudget::from_json(const Json& j) {
  TrainBudget b;
  b.max_epochs = j.value("max_epochs", b.max_epochs);
  b.early_stop_patience = j.value("early_stop_patience", b.early_stop_patience);
  b.batch_size = j.value("batch_size", b.batch_size);
  b.validate();
  return b;
}

double lr_at(Schedule schedule, long epoch_or_step, double base_lr, const ScheduleExtras& extras) {
  switch (schedule) {
    case Schedule::constant: return base_lr;
    case Schedule::step_decay: return base_lr * std::pow(0.8, static_cast<double>(epoch_or_step / 10));
    case Schedule::cosine: {
      const double frac = static_cast<double>(epoch_or_step) / extras.max_epochs;
      return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
    }
    case Schedule::noam: {
      const double step = static_cast<double>(std::max(1L, epoch_or_step));
      return base_lr * std::pow(extras.embed_dim, -0.5) *
             std::min(std::pow(step, -0.5), step * std::pow(extras.warmup, -1.5));
    }
  }
  throw ValidationError("unknown schedule");
}

EarlyStopper::EarlyStopper(int patience) : patience_(patience) {
  if (patience < 1) throw ValidationError("patience must be positive");
}

bool EarlyStopper::update(double loss) {
  ++epochs_;
  if (loss < best_) {
    best_ = loss;
    best_epoch_ = epochs_;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

OptimizerPlan optimizer_plan(ssl::PretextMethod m) {
  using ssl::PretextMethod;
  switch (m) {
    case PretextMethod::multitask:
    case PretextMethod::cpc:
    case PretextMethod::autoencoder: return {OptimizerKind::adam, Schedule::constant, 0.0};
    case PretextMethod::masked_recon: return {OptimizerKind::adam, Schedule::noam, 0.0};
    case PretextMethod::simclr:
    case PretextMethod::simsiam:
    case PretextMethod::byol: return {OptimizerKind::sgd, Schedule::cosine, 0.9};
  }
  throw ValidationError("unknown pretext method");
}

Json EpochRecord::to_json() const {
  Json j = {{"epoch", epoch}, {"train_loss", train_loss}, {"val_loss", val_loss}, {"lr", lr}};
  if (!std::isnan(val_f1)) j["val_f1"] = val_f1;
  return j;
}

ssl::PretextConfig apply_combo(ssl::PretextConfig cfg, const HyperparamCombo& combo) {
  Json enc = cfg.encoder.is_null() ? ssl::default_encoder_config(cfg.method) : cfg.encoder;
  const std::string kind = enc.value("kind", std::string("conv"));
  if (combo.has("kernel_size") && (kind == "cpc" || kind == "autoencoder")) {
    enc["kernel"] = combo.integer("kernel_size", 0);
  }
  if (combo.has("layers") && kind == "transformer") enc["layers"] = combo.integer("layers", 0);
  cfg.encoder = enc;
  cfg.cpc_k = combo.integer("cpc_k", cfg.cpc_k);
  cfg.mask_fraction = combo.number("mask_fraction", cfg.mask_fraction);
  return cfg;
}

namespace {

constexpr std::size_t kEvalBatch = 256;

/// Near-equal consecutive batches of `order`, none smaller than batch_size
/// unless the whole set is.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order, int batch_size) {
  const std::size_t n = order.size();
  const std::size_t count = std::max<std::size_t>(1, n / static_cast<std::size_t>(batch_size));
  std::vector<std::vector<std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t len = n / count + (b < n % count ? 1 : 0);
    out.emplace_back(order.begin() + static_cast<long>(begin), order.begin() + static_cast<long>(begin + len));
    begin += len;
  }
  return out;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::unique_ptr<nn::Optimizer> make_optimizer(const OptimizerPlan& plan, std::vector<Tensor> params, double wd) {
  if (plan.optimizer == OptimizerKind::sgd) return std::make_unique<nn::SGD>(std::move(params), plan.momentum, wd);
  return std::make_unique<nn::Adam>(std::move(params), wd);
}

double mean_pretext_loss(ssl::PretextModel& model, const data::WindowSet& ws, int batch_size, std::uint64_t seed) {
  nn::NoGradGuard guard;
  model.set_training(false);
  Rng rng(mix_seed(seed, 0x7661));
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& batch : make_batches(iota(ws.size()), batch_size)) {
    total += model.loss(models::make_batch(ws, batch), rng).item() * static_cast<double>(batch.size());
    count += batch.size();
  }
  model.set_training(true);
  return total / static_cast<double>(count);
}

Tensor take_rows(const Tensor& x, const std::vector<std::size_t>& rows) {
  const int F = x.dim(1);
  std::vector<double> v;
  v.reserve(rows.size() * static_cast<std::size_t>(F));
  auto src = x.values();
  for (std::size_t r : rows) {
    v.insert(v.end(), src.begin() + static_cast<long>(r * F), src.begin() + static_cast<long>((r + 1) * F));
  }
  return Tensor({static_cast<int>(rows.size()), F}, std::move(v));
}

std::vector<int> argmax_rows(const Tensor& logits) {
  const int N = logits.dim(0), C = logits.dim(1);
  std::vector<int> out(static_cast<std::size_t>(N));
  auto v = logits.values();
  for (int i = 0; i < N; ++i) {
    auto row = v.subspan(static_cast<std::size_t>(i) * C, static_cast<std::size_t>(C));
    out[static_cast<std::size_t>(i)] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::vector<int> checked_labels(const data::WindowSet& ws, int num_classes) {
  std::vector<int> labels = ws.labels();
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw ValidationError("label " + std::to_string(y) + " outside class range [0, " +
                            std::to_string(num_classes) + ")");
    }
  }
  return labels;
}

std::vector<int> gather(const std::vector<int>& v, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

}  // namespace

int class_count(const data::WindowSet& ws) {
  if (ws.num_classes() > 0) return ws.num_classes();
  int c = 0;
  for (const auto& w : ws.windows) c = std::max(c, w.label + 1);
  return c;
}

PretrainResult pretrain(const ssl::PretextConfig& base, const data::WindowSet& train, const data::WindowSet& val,
                        const HyperparamCombo& combo, const TrainBudget& budget, std::uint64_t seed) {
  budget.validate();
  if (train.empty()) throw ValidationError("pretraining needs at least one window");
  if (val.empty()) throw ValidationError("pretraining needs validation windows");
  const ssl::PretextConfig cfg = apply_combo(base, combo);
  Rng rng(seed);
  auto model = ssl::make_pretext_model(cfg, rng);
  const OptimizerPlan plan = optimizer_plan(cfg.method);
  auto optimizer = make_optimizer(plan, model->trainable_parameters(), combo.number("weight_decay", 0.0));

  ScheduleExtras extras;
  extras.max_epochs = budget.max_epochs;
  extras.warmup = combo.integer("warmup", extras.warmup);
  extras.embed_dim = model->config().encoder.value("embed_dim", extras.embed_dim);
  const double base_lr = combo.number("lr", plan.schedule == Schedule::noam ? 1.0 : 1e-3);
  const int batch_size = combo.integer("batch_size", budget.batch_size);

  auto snapshot = [&] {
    ModelCheckpoint ckpt = model->checkpoint();
    ckpt.pretrain_config["combo"] = combo.to_json();
    ckpt.pretrain_config["budget"] = budget.to_json();
    ckpt.seed = seed;
    return ckpt;
  };

  PretrainResult result;
  result.checkpoint = snapshot();
  EarlyStopper stopper(budget.early_stop_patience);
  std::vector<std::size_t> order = iota(train.size());
  long step = 0;
  model->set_training(true);
  for (int epoch = 0; epoch < budget.max_epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0, lr = 0.0;
    for (const auto& batch : make_batches(order, batch_size)) {
      ++step;
      lr = lr_at(plan.schedule, plan.schedule == Schedule::noam ? step : epoch, base_lr, extras);
      Tensor loss = model->loss(models::make_batch(train, batch), rng);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        result.diverged = true;
        result.diagnostic = "non-finite training loss at epoch " + std::to_string(epoch + 1) + ", step " +
                            std::to_string(step);
        return result;
      }
      optimizer->zero_grad();
      loss.backward();
      optimizer->step(lr);
      model->after_step();
      total += value * static_cast<double>(batch.size());
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = total / static_cast<double>(train.size());
    rec.val_loss = mean_pretext_loss(*model, val, batch_size, seed);
    rec.lr = lr;
    result.history.push_back(rec);
    if (!std::isfinite(rec.val_loss)) {
      result.diverged = true;
      result.diagnostic = "non-finite validation loss at epoch " + std::to_string(rec.epoch);
      return result;
    }
    if (stopper.update(rec.val_loss)) {
      result.checkpoint = snapshot();
      result.best_epoch = rec.epoch;
      result.best_val_loss = rec.val_loss;
    }
    if (stopper.should_stop()) break;
  }
  return result;
}

PretrainResult pretrain(ssl::PretextMethod method, const data::WindowSet& ws, const HyperparamCombo& combo,
                        const TrainBudget& budget, std::uint64_t seed) {
  if (ws.size() < 4) throw ValidationError("pretraining needs at least 4 windows");
  std::vector<std::size_t> order = iota(ws.size());
  Rng rng(mix_seed(seed, 0x5b1));
  rng.shuffle(order);
  const std::size_t n_val = std::max<std::size_t>(2, ws.size() / 10);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<long>(n_val), order.end());
  ssl::PretextConfig cfg;
  cfg.method = method;
  return pretrain(cfg, ws.subset(train_idx), ws.subset(val_idx), combo, budget, seed);
}

ModelCheckpoint initial_checkpoint(const ssl::PretextConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  auto model = ssl::make_pretext_model(cfg, rng);
  ModelCheckpoint ckpt = model->checkpoint();
  ckpt.seed = seed;
  return ckpt;
}

Classifier::Classifier(std::unique_ptr<models::Encoder> encoder, std::unique_ptr<models::Head> head,
                       int num_classes)
    : encoder_(std::move(encoder)), head_(std::move(head)), num_classes_(num_classes) {
  if (!encoder_ || !head_) throw ValidationError("classifier needs an encoder and a head");
  if (head_->in_features() != encoder_->feature_dim()) throw ShapeError("head width does not match encoder");
}

Tensor encode(models::Encoder& encoder, const data::WindowSet& ws) {
  if (ws.empty()) throw ValidationError("no windows to encode");
  nn::NoGradGuard guard;
  encoder.set_training(false);
  Rng rng(0);
  const int F = encoder.feature_dim();
  nn::Buffer out;
  out.reserve(ws.size() * static_cast<std::size_t>(F));
  for (const auto& batch : make_batches(iota(ws.size()), kEvalBatch)) {
    Tensor f = encoder.features(models::make_batch(ws, batch), rng);
    out.insert(out.end(), f.values().begin(), f.values().end());
  }
  return Tensor({static_cast<int>(ws.size()), F}, std::move(out));
}

Tensor Classifier::features(const data::WindowSet& ws) const { return encode(*encoder_, ws); }

std::vector<int> Classifier::predict_features(const Tensor& features) const {
  nn::NoGradGuard guard;
  head_->set_training(false);
  Rng rng(0);
  return argmax_rows(models::classifier_forward(*head_, features, rng));
}

std::vector<int> Classifier::predict(const data::WindowSet& ws) const { return predict_features(features(ws)); }

ModelCheckpoint Classifier::checkpoint() const {
  ModelCheckpoint ckpt;
  ckpt.arch = {{"encoder", encoder_->config()},
               {"head",
                {{"kind", models::to_string(head_->kind())},
                 {"in_features", head_->in_features()},
                 {"num_classes", num_classes_}}}};
  models::capture(ckpt, *encoder_, "encoder.");
  models::capture(ckpt, *head_, "head.");
  return ckpt;
}

Classifier Classifier::load(const ModelCheckpoint& ckpt) {
  if (!ckpt.arch.contains("head")) throw IntegrityError("checkpoint has no classifier head");
  const Json& h = ckpt.arch["head"];
  Rng rng(0);
  auto head = std::make_unique<models::Head>(models::parse_head(h.at("kind").get<std::string>()),
                                             h.at("in_features").get<int>(), rng, h.at("num_classes").get<int>());
  models::restore(*head, ckpt, "head.");
  return Classifier(models::load_encoder(ckpt), std::move(head), h.at("num_classes").get<int>());
}

HeadFitResult fit_head(const Tensor& train_x, std::span<const int> train_labels, const Tensor& select_x,
                       std::span<const int> select_labels, int num_classes, models::HeadKind head_kind,
                       const HyperparamCombo& combo, const TrainBudget& budget, std::uint64_t seed) {
  budget.validate();
  if (train_x.shape().size() != 2 || train_x.shape()[0] != static_cast<int>(train_labels.size()) ||
      train_labels.empty()) {
    throw ShapeError("fit_head: features and labels disagree");
  }
  const bool self_select = select_labels.empty();
  const Tensor& sel_x = self_select ? train_x : select_x;
  const std::span<const int> sel_labels = self_select ? train_labels : select_labels;
  if (sel_x.shape()[0] != static_cast<int>(sel_labels.size())) throw ShapeError("fit_head: selection rows disagree");
  for (const auto& labels : {train_labels, sel_labels}) {
    for (int y : labels) {
      if (y < 0 || y >= num_classes) throw ValidationError("label outside the class range");
    }
  }
  const std::vector<int> train_y(train_labels.begin(), train_labels.end());
  const std::vector<int> sel_y(sel_labels.begin(), sel_labels.end());

  Rng rng(seed);
  HeadFitResult result;
  result.head = std::make_unique<models::Head>(head_kind, train_x.shape()[1], rng, num_classes);
  models::Head& head = *result.head;
  nn::Adam optimizer(head.parameters(), combo.number("class_weight_decay", 0.0));
  const double base_lr = combo.number("class_lr", 1e-3);
  const int batch_size = combo.integer("class_batch_size", budget.batch_size);
  ModelCheckpoint best;
  models::capture(best, head);
  result.best_val_f1 = -1.0;
  std::vector<std::size_t> order = iota(train_y.size());
  for (int epoch = 0; epoch < budget.max_epochs; ++epoch) {
    const double lr = lr_at(Schedule::step_decay, epoch, base_lr);
    head.set_training(true);
    rng.shuffle(order);
    double total = 0.0;
    for (const auto& batch : make_batches(order, batch_size)) {
      Tensor logits = models::classifier_forward(head, take_rows(train_x, batch), rng);
      Tensor loss = nn::cross_entropy(logits, gather(train_y, batch));
      if (!std::isfinite(loss.item())) {
        result.diverged = true;
        break;
      }
      optimizer.zero_grad();
      loss.backward();
      optimizer.step(lr);
      total += loss.item() * static_cast<double>(batch.size());
    }
    if (result.diverged) break;
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    rec.train_loss = total / static_cast<double>(train_y.size());
    {
      nn::NoGradGuard guard;
      head.set_training(false);
      Tensor logits = models::classifier_forward(head, sel_x, rng);
      rec.val_loss = nn::cross_entropy(logits, sel_y).item();
      rec.val_f1 = eval::macro_f1(argmax_rows(logits), sel_y, num_classes);
    }
    result.history.push_back(rec);
    if (rec.val_f1 > result.best_val_f1) {
      result.best_val_f1 = rec.val_f1;
      result.best_epoch = rec.epoch;
      best = {};
      models::capture(best, head);
    }
  }
  models::restore(head, best);
  head.set_training(false);
  result.best_val_f1 = std::max(result.best_val_f1, 0.0);
  return result;
}

FinetuneResult finetune(const ModelCheckpoint& ckpt, const data::WindowSet& train, const data::WindowSet& val,
                        models::HeadKind head_kind, const HyperparamCombo& combo, const TrainBudget& budget,
                        std::uint64_t seed) {
  budget.validate();
  if (train.empty()) throw ValidationError("fine-tuning needs labelled windows");
  const int C = class_count(train);
  const std::vector<int> train_labels = checked_labels(train, C);
  const std::vector<int> val_labels = val.empty() ? std::vector<int>{} : checked_labels(val, C);

  auto encoder = models::load_encoder(ckpt);
  const Tensor train_x = encode(*encoder, train);
  const Tensor val_x = val.empty() ? train_x : encode(*encoder, val);
  HeadFitResult fit = fit_head(train_x, train_labels, val_x, val_labels, C, head_kind, combo, budget, seed);
  FinetuneResult result;
  result.classifier = std::make_unique<Classifier>(std::move(encoder), std::move(fit.head), C);
  result.history = std::move(fit.history);
  result.best_epoch = fit.best_epoch;
  result.best_val_f1 = fit.best_val_f1;
  result.diverged = fit.diverged;
  return result;
}

std::vector<int> predict(models::Baseline& model, const data::WindowSet& ws) {
  if (ws.empty()) return {};
  nn::NoGradGuard guard;
  model.set_training(false);
  Rng rng(0);
  std::vector<int> out;
  out.reserve(ws.size());
  for (const auto& batch : make_batches(iota(ws.size()), kEvalBatch)) {
    const auto p = argmax_rows(model.forward(models::make_batch(ws, batch), rng));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

SupervisedResult supervised_train(models::BaselineKind kind, const data::WindowSet& train,
                                  const data::WindowSet& val, const HyperparamCombo& combo,
                                  const TrainBudget& budget, std::uint64_t seed) {
  budget.validate();
  if (train.empty()) throw ValidationError("supervised training needs labelled windows");
  const int C = class_count(train);
  const std::vector<int> train_labels = checked_labels(train, C);
  const data::WindowSet& select = val.empty() ? train : val;
  const std::vector<int> select_labels = checked_labels(select, C);

  Rng rng(seed);
  SupervisedResult result;
  result.model = std::make_unique<models::Baseline>(kind, C, rng);
  models::Baseline& model = *result.model;
  nn::Adam optimizer(model.parameters(), combo.number("weight_decay", 0.0));
  const double base_lr = combo.number("lr", 1e-3);
  const int batch_size = combo.integer("batch_size", budget.batch_size);
  ModelCheckpoint best;
  models::capture(best, model);
  result.best_val_f1 = -1.0;
  std::vector<std::size_t> order = iota(train.size());
  for (int epoch = 0; epoch < budget.max_epochs; ++epoch) {
    const double lr = lr_at(Schedule::step_decay, epoch, base_lr);
    model.set_training(true);
    rng.shuffle(order);
    double total = 0.0;
    for (const auto& batch : make_batches(order, batch_size)) {
      Tensor loss = nn::cross_entropy(model.forward(models::make_batch(train, batch), rng),
                                      gather(train_labels, batch));
      if (!std::isfinite(loss.item())) {
        result.diverged = true;
        break;
      }
      optimizer.zero_grad();
      loss.backward();
      optimizer.step(lr);
      total += loss.item() * static_cast<double>(batch.size());
    }
    if (result.diverged) break;
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    rec.train_loss = total / static_cast<double>(train.size());
    rec.val_f1 = eval::macro_f1(predict(model, select), select_labels, C);
    result.history.push_back(rec);
    if (rec.val_f1 > result.best_val_f1) {
      result.best_val_f1 = rec.val_f1;
      result.best_epoch = rec.epoch;
      best = {};
      models::capture(best, model);
    }
  }
  models::restore(model, best);
  model.set_training(false);
  result.best_val_f1 = std::max(result.best_val_f1, 0.0);
  return result;
}

}  // namespace sslhar::train
