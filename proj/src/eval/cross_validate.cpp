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

#include "sslhar/eval/cross_validate.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "sslhar/data/pipeline.hpp"
#include "sslhar/errors.hpp"

namespace sslhar::eval {

namespace {

using Clock = std::chrono::steady_clock;
using results::RunRecord;
using train::HyperparamCombo;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct FoldData {
  data::WindowSet train, val, test;
};

struct Encoder {
  std::optional<models::ModelCheckpoint> ckpt;
  std::string diagnostic;
  Json metrics = Json::object();
};

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads; rethrows the first failure.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  const auto count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (count <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < count; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

class Runner {
 public:
  Runner(const CvConfig& cfg, const data::WindowSet& source, const data::WindowSet& target,
         const data::FoldPlan& folds, results::ResultStore* store)
      : cfg_(cfg), source_(source), store_(store) {
    std::vector<std::size_t> labelled;
    for (std::size_t i = 0; i < target.size(); ++i) {
      if (target.windows[i].label != data::kUnlabeled) labelled.push_back(i);
    }
    const data::WindowSet t = target.subset(labelled);
    for (const auto& f : folds.folds) {
      folds_.push_back({t.filter_users(f.train_users), t.filter_users(f.val_users), t.filter_users(f.test_users)});
      if (folds_.back().train.empty() || folds_.back().test.empty()) {
        throw ValidationError("fold without labelled training or test windows");
      }
    }
    num_classes_ = train::class_count(t);
    dataset_id_ = target.dataset_id;
    data_hash_ = data::content_hash(t);
    if (cfg.method.kind == MethodSpec::Kind::pretext) data_hash_ = data::content_hash(source) + "/" + data_hash_;
  }

  std::size_t fold_count() const { return folds_.size(); }

  /// Records of one (combo, seed) block across all folds, training only what is missing.
  std::vector<RunRecord> run_block(const HyperparamCombo& combo, std::uint64_t seed, Json tags) {
    std::vector<std::string> ids;
    std::vector<std::optional<RunRecord>> found;
    bool complete = true;
    for (std::size_t f = 0; f < folds_.size(); ++f) {
      ids.push_back(results::make_run_id(cfg_.method.name(), dataset_id_, cfg_.criterion, static_cast<int>(f), seed,
                                         combo, cfg_.protocol_tags));
      found.push_back(lookup(ids.back()));
      if (!found.back()) complete = false;
    }
    std::vector<RunRecord> out;
    if (complete) {
      for (auto& r : found) out.push_back(std::move(*r));
      return out;
    }
    const Encoder& enc = cached_encoder(combo, seed);
    for (std::size_t f = 0; f < folds_.size(); ++f) {
      if (found[f]) {
        out.push_back(std::move(*found[f]));
        continue;
      }
      out.push_back(run_fold(combo, seed, tags, f, ids[f], enc));
      if (store_) store_->append(out.back());
      std::lock_guard lock(done_mu_);
      done_.emplace(ids[f], out.back());
    }
    return out;
  }

  std::atomic<std::size_t> trained{0};
  std::atomic<std::size_t> pretrained{0};

 private:
  std::optional<RunRecord> lookup(const std::string& id) {
    if (store_) {
      if (auto r = store_->find(id)) return r;
    }
    std::lock_guard lock(done_mu_);
    auto it = done_.find(id);
    if (it == done_.end()) return std::nullopt;
    return it->second;
  }

  /// One pretraining per (pretext part, seed), shared by every combo and worker that needs it.
  const Encoder& cached_encoder(const HyperparamCombo& combo, std::uint64_t seed) {
    const std::string key = pretext_part(combo).key() + "#" + std::to_string(seed);
    std::shared_future<Encoder> fut;
    std::promise<Encoder> mine;
    bool owner = false;
    {
      std::lock_guard lock(cache_mu_);
      auto it = cache_.find(key);
      if (it == cache_.end()) {
        owner = true;
        it = cache_.emplace(key, mine.get_future().share()).first;
      }
      fut = it->second;
    }
    if (owner) {
      try {
        mine.set_value(encoder_for(combo, seed));
      } catch (...) {
        mine.set_exception(std::current_exception());
      }
    }
    return fut.get();
  }

  Encoder encoder_for(const HyperparamCombo& combo, std::uint64_t seed) {
    Encoder enc;
    if (cfg_.method.kind == MethodSpec::Kind::baseline) return enc;
    const auto t0 = Clock::now();
    if (cfg_.method.kind == MethodSpec::Kind::random_init) {
      enc.ckpt = train::initial_checkpoint(cfg_.method.pretext_config(), seed);
      return enc;
    }
    auto [tr, val] = pretrain_split(source_, seed);
    auto r = train::pretrain(cfg_.method.pretext_config(), tr, val, pretext_part(combo), cfg_.pretrain_budget, seed);
    ++pretrained;
    enc.metrics["pretrain_epochs"] = static_cast<int>(r.history.size());
    enc.metrics["pretrain_best_epoch"] = r.best_epoch;
    enc.metrics["pretrain_wall_time_s"] = seconds_since(t0);
    if (r.diverged) {
      enc.diagnostic = r.diagnostic;
    } else {
      enc.metrics["pretrain_val_loss"] = r.best_val_loss;
      enc.ckpt = std::move(r.checkpoint);
    }
    return enc;
  }

  RunRecord run_fold(const HyperparamCombo& combo, std::uint64_t seed, const Json& tags, std::size_t f,
                     const std::string& id, const Encoder& enc) {
    const auto t0 = Clock::now();
    RunRecord rec;
    rec.run_id = id;
    rec.method = cfg_.method.name();
    rec.dataset_id = dataset_id_;
    rec.criterion = cfg_.criterion;
    rec.fold = static_cast<int>(f);
    rec.seed = seed;
    rec.combo = combo;
    rec.data_hash = data_hash_;
    rec.tags = tags;
    rec.metrics = enc.metrics;
    const FoldData& fd = folds_[f];
    const data::WindowSet train_set =
        cfg_.train_filter ? cfg_.train_filter(fd.train, mix_seed(seed, f)) : fd.train;
    rec.metrics["train_windows"] = train_set.size();

    std::vector<int> pred;
    bool diverged = false;
    if (cfg_.method.kind == MethodSpec::Kind::baseline) {
      auto r = train::supervised_train(cfg_.method.baseline, train_set, fd.val, combo, cfg_.finetune_budget, seed);
      diverged = r.diverged;
      rec.metrics["val_f1"] = r.best_val_f1;
      rec.metrics["best_epoch"] = r.best_epoch;
      pred = train::predict(*r.model, fd.test);
    } else if (enc.ckpt) {
      auto r = train::finetune(*enc.ckpt, train_set, fd.val, cfg_.head, combo, cfg_.finetune_budget, seed);
      diverged = r.diverged;
      rec.metrics["val_f1"] = r.best_val_f1;
      rec.metrics["best_epoch"] = r.best_epoch;
      pred = r.classifier->predict(fd.test);
    } else {
      rec.status = "failed";
      rec.diagnostic = enc.diagnostic;
    }
    ++trained;
    if (diverged) {
      rec.status = "failed";
      rec.diagnostic = "non-finite classifier loss";
    }
    if (rec.status == "ok") {
      const auto labels = fd.test.labels();
      rec.metrics["macro_f1"] = macro_f1(pred, labels, num_classes_);
      rec.metrics["per_class_f1"] = per_class_f1(pred, labels, num_classes_);
      rec.metrics["accuracy"] = accuracy(pred, labels);
    }
    rec.wall_time_s = seconds_since(t0);
    rec.created_at = results::utc_timestamp();
    return rec;
  }

  const CvConfig& cfg_;
  const data::WindowSet& source_;
  results::ResultStore* store_;
  std::vector<FoldData> folds_;
  int num_classes_ = 0;
  std::string dataset_id_;
  std::string data_hash_;
  std::mutex cache_mu_;
  std::mutex done_mu_;
  std::map<std::string, RunRecord> done_;
  std::map<std::string, std::shared_future<Encoder>> cache_;
};

double block_mean(const std::vector<RunRecord>& block) {
  double total = 0.0;
  for (const auto& r : block) {
    if (r.status != "ok") return -1.0;
    total += r.metrics.at("macro_f1").get<double>();
  }
  return block.empty() ? -1.0 : total / static_cast<double>(block.size());
}

}  // namespace

std::string MethodSpec::name() const {
  switch (kind) {
    case Kind::pretext: return ssl::to_string(pretext);
    case Kind::baseline: return models::to_string(baseline);
    case Kind::random_init: return "random_init:" + ssl::to_string(pretext);
  }
  return "";
}

MethodSpec MethodSpec::parse(const std::string& name) {
  MethodSpec m;
  const std::string prefix = "random_init";
  if (name.rfind(prefix, 0) == 0) {
    m.kind = Kind::random_init;
    if (name.size() > prefix.size()) {
      if (name[prefix.size()] != ':') throw ValidationError("unknown method '" + name + "'");
      m.pretext = ssl::parse_method(name.substr(prefix.size() + 1));
    }
    return m;
  }
  try {
    m.pretext = ssl::parse_method(name);
    return m;
  } catch (const ValidationError&) {
  }
  m.kind = Kind::baseline;
  m.baseline = models::parse_baseline(name);
  return m;
}

ssl::PretextConfig MethodSpec::pretext_config() const {
  ssl::PretextConfig cfg;
  cfg.method = pretext;
  cfg.encoder = encoder;
  return cfg;
}

HyperparamCombo pretext_part(const HyperparamCombo& combo) {
  HyperparamCombo out;
  out.draw_seed = combo.draw_seed;
  for (const auto& [k, v] : combo.values) {
    if (k.rfind("class_", 0) != 0) out.values[k] = v;
  }
  return out;
}

std::vector<HyperparamCombo> search_combos(const MethodSpec& method, std::size_t n_pretrain, std::size_t n_finetune,
                                          std::uint64_t seed) {
  if (n_finetune == 0) throw ValidationError("search needs at least one combo");
  switch (method.kind) {
    case MethodSpec::Kind::baseline: return train::draw_combos(train::baseline_space(method.baseline), n_finetune, seed);
    case MethodSpec::Kind::random_init:
      return train::draw_combos(train::classifier_space(method.pretext), n_finetune, seed);
    case MethodSpec::Kind::pretext: break;
  }
  if (n_pretrain == 0) throw ValidationError("search needs at least one pretext combo");
  const auto pretext = train::draw_combos(train::pretrain_space(method.pretext), n_pretrain, mix_seed(seed, 1));
  train::HyperparamSpace joint = train::classifier_space(method.pretext);
  std::vector<Json> ids;
  for (std::size_t i = 0; i < pretext.size(); ++i) ids.push_back(static_cast<int>(i));
  const std::string pick = "pretext_combo";
  joint.values[pick] = ids;
  std::vector<HyperparamCombo> out;
  for (auto c : train::draw_combos(joint, n_finetune, mix_seed(seed, 2))) {
    const auto& p = pretext[static_cast<std::size_t>(c.values.at(pick).get<int>())];
    c.values.erase(pick);
    for (const auto& [k, v] : p.values) c.values[k] = v;
    out.push_back(std::move(c));
  }
  return out;
}

std::pair<data::WindowSet, data::WindowSet> pretrain_split(const data::WindowSet& ws, std::uint64_t seed) {
  if (ws.size() < 4) throw ValidationError("pretraining needs at least 4 windows");
  std::vector<std::size_t> order(ws.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x5b1));
  rng.shuffle(order);
  const std::size_t n_val = std::max<std::size_t>(2, ws.size() / 10);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> tr(order.begin() + static_cast<long>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  return {ws.subset(tr), ws.subset(val)};
}

CvSummary cross_validate(const CvConfig& cfg, const data::WindowSet& source, const data::WindowSet& target,
                         const data::FoldPlan& folds, const std::vector<HyperparamCombo>& combos,
                         results::ResultStore* store) {
  if (combos.empty()) throw ValidationError("cross validation needs at least one combo");
  if (folds.folds.empty()) throw ValidationError("cross validation needs at least one fold");
  if (cfg.seeds.empty()) throw ValidationError("cross validation needs at least one seed");
  if (cfg.method.kind == MethodSpec::Kind::pretext && source.empty()) {
    throw ValidationError("pretext methods need source windows");
  }
  Runner runner(cfg, source, target, folds, store);

  auto tags_for = [&](const char* stage, std::size_t combo_index) {
    Json t = cfg.protocol_tags;
    t["stage"] = stage;
    t["combo_index"] = combo_index;
    return t;
  };

  CvSummary out;
  std::vector<std::vector<RunRecord>> search(combos.size());
  parallel_for(combos.size(), cfg.workers,
               [&](std::size_t i) { search[i] = runner.run_block(combos[i], cfg.search_seed, tags_for("search", i)); });
  for (std::size_t i = 0; i < combos.size(); ++i) {
    const double m = block_mean(search[i]);
    out.combo_mean_f1.push_back(m);
    if (m >= 0.0 && (out.best_combo < 0 || m > out.combo_mean_f1[static_cast<std::size_t>(out.best_combo)])) {
      out.best_combo = static_cast<int>(i);
    }
    out.records.insert(out.records.end(), search[i].begin(), search[i].end());
  }

  if (out.best_combo >= 0) {
    const auto best = static_cast<std::size_t>(out.best_combo);
    std::vector<std::vector<RunRecord>> finals(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), cfg.workers, [&](std::size_t s) {
      Json tags = tags_for("final", best);
      tags["final_seeds"] = cfg.seeds;
      finals[s] = runner.run_block(combos[best], cfg.seeds[s], tags);
    });
    std::vector<double> per_seed;
    for (auto& block : finals) {
      per_seed.push_back(std::max(0.0, block_mean(block)));
      out.records.insert(out.records.end(), block.begin(), block.end());
    }
    out.final_f1 = mean_std(per_seed);
  }
  out.trained = runner.trained;
  out.pretrained = runner.pretrained;
  return out;
}

}  // namespace sslhar::eval
