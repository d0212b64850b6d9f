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

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "json.hpp"
#include "sslhar/analysis/features.hpp"
#include "sslhar/data/pipeline.hpp"
#include "sslhar/errors.hpp"
#include "sslhar/eval/metrics.hpp"
#include "sslhar/results/experiment.hpp"
#include "sslhar/results/report.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;
using namespace sslhar;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string store;
  std::optional<int> workers;
};

Json read_json(const std::string& path) {
  if (path.empty()) throw ValidationError("--config is required");
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open config " + path);
  try {
    return Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw SchemaError("config " + path + ": " + e.what());
  }
}

void emit(const Json& j) { std::cout << j.dump(2) << std::endl; }

train::HyperparamCombo combo_of(const Json& cfg) {
  train::HyperparamCombo c;
  if (cfg.contains("combo")) c.values = cfg["combo"].get<std::map<std::string, Json>>();
  return c;
}

train::TrainBudget budget_of(const Json& cfg, const char* key = "budget") {
  return cfg.contains(key) ? train::TrainBudget::from_json(cfg[key]) : train::TrainBudget{};
}

data::WindowSet windows_of(const Json& cfg, const char* key) {
  if (!cfg.contains(key)) throw ValidationError(std::string("config field '") + key + "' is required");
  return data::load_windows(cfg[key].get<std::string>());
}

fs::path out_path(const Common& c) {
  if (c.out.empty()) throw ValidationError("--out is required");
  return c.out;
}

int prepare_data(const Common& c) {
  const Json cfg = read_json(c.config);
  const auto source = results::DataSource::from_json(cfg.at("input"));
  const double hz = cfg.value("rate_hz", 50.0);
  const int length = cfg.value("window_length", 100);
  const double overlap = cfg.value("overlap", 0.0);
  data::Dataset ds = source.load();
  if (ds.sample_rate_hz != hz) ds = data::resample(ds, hz);
  data::WindowSet ws = data::make_windows(ds, length, overlap);
  if (cfg.value("normalize", true)) {
    const auto stats = cfg.contains("stats_from")
                           ? data::compute_norm_stats(data::load_windows(cfg["stats_from"].get<std::string>()))
                           : data::compute_norm_stats(ws);
    ws = data::normalize(ws, stats);
  }
  data::save_windows(ws, out_path(c));
  emit({{"windows", ws.size()}, {"users", ws.users().size()}, {"hash", data::content_hash(ws)}});
  return 0;
}

int pretrain(const Common& c) {
  const Json cfg = read_json(c.config);
  ssl::PretextConfig pc;
  pc.method = ssl::parse_method(cfg.at("method").get<std::string>());
  if (cfg.contains("encoder")) pc.encoder = cfg["encoder"];
  const std::uint64_t seed = c.seed.value_or(cfg.value("seed", std::uint64_t{0}));
  const auto ws = windows_of(cfg, "windows");
  auto [tr, val] = eval::pretrain_split(ws, seed);
  const auto r = train::pretrain(pc, tr, val, combo_of(cfg), budget_of(cfg), seed);
  if (r.diverged) throw Error("pretraining diverged: " + r.diagnostic);
  models::save_checkpoint(r.checkpoint, out_path(c));
  emit({{"best_epoch", r.best_epoch}, {"best_val_loss", r.best_val_loss}, {"epochs", r.history.size()}});
  return 0;
}

int finetune(const Common& c) {
  const Json cfg = read_json(c.config);
  const std::uint64_t seed = c.seed.value_or(cfg.value("seed", std::uint64_t{0}));
  const auto ckpt = models::load_checkpoint(cfg.at("checkpoint").get<std::string>());
  const auto train_ws = windows_of(cfg, "train");
  const data::WindowSet val = cfg.contains("val") ? windows_of(cfg, "val") : data::WindowSet{};
  const auto head = models::parse_head(cfg.value("head", std::string("linear")));
  auto r = train::finetune(ckpt, train_ws, val, head, combo_of(cfg), budget_of(cfg), seed);
  if (r.diverged) throw Error("fine-tuning diverged");
  Json out{{"best_epoch", r.best_epoch}, {"best_val_f1", r.best_val_f1}};
  if (cfg.contains("test")) {
    const auto test = windows_of(cfg, "test");
    out["test_macro_f1"] =
        eval::macro_f1(r.classifier->predict(test), test.labels(), r.classifier->num_classes());
  }
  models::save_checkpoint(r.classifier->checkpoint(), out_path(c));
  emit(out);
  return 0;
}

int experiment(const Common& c, const std::string& criterion, const std::string& params) {
  auto cfg = results::ExperimentConfig::from_json(read_json(c.config));
  if (!criterion.empty()) cfg.protocol.criterion = eval::parse_criterion(criterion);
  if (!params.empty()) {
    try {
      cfg.protocol.parameters = Json::parse(params);
    } catch (const Json::parse_error& e) {
      throw SchemaError(std::string("--params: ") + e.what());
    }
  }
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.workers) cfg.workers = *c.workers;
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  const fs::path store_path = c.store.empty() ? cfg.out_dir / "runs.jsonl" : fs::path(c.store);
  results::ResultStore store(store_path);
  for (const auto& w : store.warnings()) std::cerr << "warning: " << w << "\n";
  const auto r = results::run(cfg, store);
  Json summary{{"records", r.records.size()}, {"trained", r.trained}, {"pretrained", r.pretrained},
               {"store", store_path.string()}};
  Json methods = Json::array();
  for (std::size_t i = 0; i < r.summaries.size(); ++i) {
    const auto& s = r.summaries[i];
    methods.push_back({{"best_combo", s.best_combo}, {"mean_f1", s.final_f1.mean}, {"std_f1", s.final_f1.std}});
  }
  summary["summaries"] = methods;
  emit(summary);
  return 0;
}

int analyze(const Common& c, const std::string& kind) {
  const Json cfg = read_json(c.config);
  const std::uint64_t seed = c.seed.value_or(cfg.value("seed", std::uint64_t{0}));
  const auto ckpt = models::load_checkpoint(cfg.at("checkpoint").get<std::string>());
  const auto ws = windows_of(cfg, "windows");
  const auto probe = analysis::probe_windows(ws, cfg.value("probe_windows", std::size_t{1000}), seed);
  auto encoder = models::load_encoder(ckpt);
  Json out;
  if (kind == "cka") {
    const auto other = cfg.contains("other")
                           ? models::load_checkpoint(cfg["other"].get<std::string>())
                           : analysis::supervised_twin(ckpt.arch["encoder"], ws, {}, combo_of(cfg), budget_of(cfg), seed);
    auto b = models::load_encoder(other);
    out = analysis::layerwise_similarity(*encoder, *b, probe).to_json();
  } else if (kind == "separability") {
    out = analysis::separability_gap(ckpt, ws, combo_of(cfg), budget_of(cfg), seed).to_json();
  } else {
    out = analysis::curve_to_json(ckpt.pretext_method,
                                  analysis::implicit_dimensionality(analysis::pca_features(*encoder, probe).values,
                                                                    cfg.value("components", 20)));
  }
  if (!c.out.empty()) {
    fs::create_directories(fs::path(c.out).parent_path().empty() ? fs::path(".") : fs::path(c.out).parent_path());
    std::ofstream(c.out) << out.dump(2) << "\n";
  }
  emit(out);
  return 0;
}

int report(const Common& c, const std::vector<std::string>& views) {
  if (c.store.empty()) throw ValidationError("--store is required");
  std::vector<results::ReportView> chosen;
  for (const auto& v : views) chosen.push_back(results::parse_view(v));
  if (chosen.empty()) chosen.assign(results::kAllViews.begin(), results::kAllViews.end());
  const auto contents = results::read_store(c.store);
  for (const auto& w : contents.warnings) std::cerr << "warning: " << w << "\n";
  Json files = Json::array();
  for (auto v : chosen) {
    for (const auto& p : results::report(contents.records, v, out_path(c))) files.push_back(p.string());
  }
  emit({{"files", files}, {"records", contents.records.size()}});
  return 0;
}

void add_common(CLI::App* sub, Common& c, bool store, bool workers) {
  sub->add_option("--config", c.config, "JSON configuration file");
  sub->add_option("--seed", c.seed, "Seed override");
  sub->add_option("--out", c.out, "Output path");
  if (store) sub->add_option("--store", c.store, "Run-record store (JSON Lines)");
  if (workers) sub->add_option("--workers", c.workers, "Concurrent runs")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised activity-recognition benchmark"};
  app.require_subcommand(1);
  Common common;
  std::string criterion, params, analysis_kind;
  std::vector<std::string> views;

  auto* prep = app.add_subcommand("prepare-data", "Ingest, resample, window and normalize a dataset");
  add_common(prep, common, false, false);
  auto* pre = app.add_subcommand("pretrain", "Pretrain an encoder with a pretext task");
  add_common(pre, common, false, false);
  auto* ft = app.add_subcommand("finetune", "Train a classifier head on a frozen encoder");
  add_common(ft, common, false, false);
  auto* sweep = app.add_subcommand("sweep", "Hyperparameter search with user-fold cross validation");
  add_common(sweep, common, true, true);
  auto* proto = app.add_subcommand("protocol", "Run an evaluation criterion by name");
  add_common(proto, common, true, true);
  proto->add_option("criterion", criterion, "Criterion name; overrides the config");
  proto->add_option("--params", params, "Criterion parameters as JSON; overrides the config");
  auto* an = app.add_subcommand("analyze", "Feature-space analyses of a pretrained encoder");
  add_common(an, common, false, false);
  an->add_option("kind", analysis_kind, "cka, separability or dimensionality")
      ->required()
      ->check(CLI::IsMember({"cka", "separability", "dimensionality"}));
  auto* rep = app.add_subcommand("report", "CSV tables and SVG plots from a run store");
  add_common(rep, common, true, false);
  rep->add_option("--view", views, "transfer_table, sweep_curves, imbalance_bars, similarity_heatmap, "
                                   "variance_curves or separability_bars; default all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (prep->parsed()) return prepare_data(common);
    if (pre->parsed()) return pretrain(common);
    if (ft->parsed()) return finetune(common);
    if (sweep->parsed()) return experiment(common, "", "");
    if (proto->parsed()) return experiment(common, criterion, params);
    if (an->parsed()) return analyze(common, analysis_kind);
    if (rep->parsed()) return report(common, views);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
