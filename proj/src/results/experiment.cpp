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

#include "sslhar/results/experiment.hpp"

#include <chrono>
#include <set>

#include "sslhar/analysis/features.hpp"
#include "sslhar/data/pipeline.hpp"
#include "sslhar/errors.hpp"

namespace sslhar::results {

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (!j.is_object()) throw SchemaError(what + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw SchemaError("unknown " + what + " field '" + k + "'");
  }
}

template <class T>
void read(const Json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("field '") + key + "': " + e.what());
  }
}

data::WindowSet windows_at_rate(const data::Dataset& ds, double hz, int length, double overlap) {
  return data::make_windows(ds.sample_rate_hz == hz ? ds : data::resample(ds, hz), length, overlap);
}

}  // namespace

Json synthetic_spec_to_json(const data::SyntheticSpec& s) {
  return {{"num_classes", s.num_classes},
          {"num_users", s.num_users},
          {"sample_rate_hz", s.sample_rate_hz},
          {"window_length", s.window_length},
          {"total_windows", s.total_windows},
          {"min_bout_windows", s.min_bout_windows},
          {"max_bout_windows", s.max_bout_windows},
          {"noise_std", s.noise_std},
          {"user_gain_std", s.user_gain_std},
          {"user_tilt_rad", s.user_tilt_rad},
          {"user_tempo_std", s.user_tempo_std},
          {"base_freq_hz", s.base_freq_hz},
          {"freq_step_hz", s.freq_step_hz},
          {"class_gravity_std", s.class_gravity_std},
          {"class_amplitude_spread", s.class_amplitude_spread},
          {"bout_gain_std", s.bout_gain_std},
          {"class_shape", s.class_shape},
          {"seed", s.seed},
          {"dataset_id", s.dataset_id}};
}

data::SyntheticSpec synthetic_spec_from_json(const Json& j) {
  data::SyntheticSpec s;
  std::set<std::string> keys;
  const Json defaults = synthetic_spec_to_json(s);
  for (const auto& [k, v] : defaults.items()) keys.insert(k);
  check_keys(j, keys, "synthetic");
  read(j, "num_classes", s.num_classes);
  read(j, "num_users", s.num_users);
  read(j, "sample_rate_hz", s.sample_rate_hz);
  read(j, "window_length", s.window_length);
  read(j, "total_windows", s.total_windows);
  read(j, "min_bout_windows", s.min_bout_windows);
  read(j, "max_bout_windows", s.max_bout_windows);
  read(j, "noise_std", s.noise_std);
  read(j, "user_gain_std", s.user_gain_std);
  read(j, "user_tilt_rad", s.user_tilt_rad);
  read(j, "user_tempo_std", s.user_tempo_std);
  read(j, "base_freq_hz", s.base_freq_hz);
  read(j, "freq_step_hz", s.freq_step_hz);
  read(j, "class_gravity_std", s.class_gravity_std);
  read(j, "class_amplitude_spread", s.class_amplitude_spread);
  read(j, "bout_gain_std", s.bout_gain_std);
  read(j, "class_shape", s.class_shape);
  read(j, "seed", s.seed);
  read(j, "dataset_id", s.dataset_id);
  return s;
}

data::Dataset DataSource::load() const {
  if (synthetic) return data::make_synthetic(*synthetic);
  return data::load_dataset(path);
}

Json DataSource::to_json() const {
  if (synthetic) return {{"synthetic", synthetic_spec_to_json(*synthetic)}};
  return {{"path", path.string()}};
}

DataSource DataSource::from_json(const Json& j) {
  check_keys(j, {"path", "synthetic"}, "data source");
  if (j.contains("path") == j.contains("synthetic")) throw SchemaError("data source needs exactly one of path, synthetic");
  DataSource d;
  if (j.contains("path")) {
    d.path = j["path"].get<std::string>();
  } else {
    d.synthetic = synthetic_spec_from_json(j["synthetic"]);
  }
  return d;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ValidationError("experiment needs at least one method");
  for (const auto& m : methods) {
    const auto spec = eval::MethodSpec::parse(m);
    if (protocol.criterion == eval::Criterion::feature_space && spec.kind != eval::MethodSpec::Kind::pretext) {
      throw ValidationError("feature-space analyses need pretext methods, got '" + m + "'");
    }
  }
  protocol.validate();
  if (!source.synthetic && source.path.empty()) throw ValidationError("source dataset missing");
  if (!target.synthetic && target.path.empty()) throw ValidationError("target dataset missing");
  if (window_length < 2) throw ValidationError("window length must be at least 2");
  if (source_overlap < 0.0 || source_overlap >= 1.0 || target_overlap < 0.0 || target_overlap >= 1.0) {
    throw ValidationError("overlap must lie in [0, 1)");
  }
  if (!(rate_hz > 0.0)) throw ValidationError("rate must be positive");
  pretrain_budget.validate();
  finetune_budget.validate();
  if (pretrain_combos == 0 || finetune_combos == 0) throw ValidationError("combo counts must be positive");
  if (folds < 2) throw ValidationError("at least 2 folds are needed");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw ValidationError("val_fraction must lie in [0, 1)");
  if (seeds.empty()) throw ValidationError("at least one seed is needed");
  models::parse_head(head);
  if (!encoders.is_object()) throw ValidationError("encoders must be an object");
  if (!analysis_combo.is_object()) throw ValidationError("analysis_combo must be an object");
  if (probe_windows < 2) throw ValidationError("probe_windows must be at least 2");
  if (workers < 1) throw ValidationError("workers must be positive");
}

Json ExperimentConfig::to_json() const {
  return {{"methods", methods},
          {"source", source.to_json()},
          {"target", target.to_json()},
          {"protocol", protocol.to_json()},
          {"window_length", window_length},
          {"source_overlap", source_overlap},
          {"target_overlap", target_overlap},
          {"rate_hz", rate_hz},
          {"pretrain_budget", pretrain_budget.to_json()},
          {"finetune_budget", finetune_budget.to_json()},
          {"pretrain_combos", pretrain_combos},
          {"finetune_combos", finetune_combos},
          {"folds", folds},
          {"val_fraction", val_fraction},
          {"seeds", seeds},
          {"seed", seed},
          {"head", head},
          {"encoders", encoders},
          {"analysis_combo", analysis_combo},
          {"probe_windows", probe_windows},
          {"out_dir", out_dir.string()},
          {"workers", workers}};
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  ExperimentConfig c;
  std::set<std::string> keys;
  const Json defaults = c.to_json();
  for (const auto& [k, v] : defaults.items()) keys.insert(k);
  check_keys(j, keys, "experiment");
  if (j.contains("methods") && j["methods"].is_string()) {
    c.methods = {j["methods"].get<std::string>()};
  } else {
    read(j, "methods", c.methods);
  }
  if (j.contains("source")) c.source = DataSource::from_json(j["source"]);
  if (j.contains("target")) c.target = DataSource::from_json(j["target"]);
  if (j.contains("protocol")) c.protocol = eval::ProtocolConfig::from_json(j["protocol"]);
  read(j, "window_length", c.window_length);
  read(j, "source_overlap", c.source_overlap);
  read(j, "target_overlap", c.target_overlap);
  read(j, "rate_hz", c.rate_hz);
  if (j.contains("pretrain_budget")) c.pretrain_budget = train::TrainBudget::from_json(j["pretrain_budget"]);
  if (j.contains("finetune_budget")) c.finetune_budget = train::TrainBudget::from_json(j["finetune_budget"]);
  read(j, "pretrain_combos", c.pretrain_combos);
  read(j, "finetune_combos", c.finetune_combos);
  read(j, "folds", c.folds);
  read(j, "val_fraction", c.val_fraction);
  read(j, "seeds", c.seeds);
  read(j, "seed", c.seed);
  read(j, "head", c.head);
  read(j, "encoders", c.encoders);
  read(j, "analysis_combo", c.analysis_combo);
  read(j, "probe_windows", c.probe_windows);
  if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
  read(j, "workers", c.workers);
  return c;
}

ProtocolData prepare_protocol(const ExperimentConfig& cfg) {
  using eval::Criterion;
  const Json& p = cfg.protocol.parameters;
  const data::Dataset source_ds = cfg.source.load();
  const data::Dataset target_ds = cfg.target.load();
  ProtocolData out;

  data::WindowSet source = windows_at_rate(source_ds, cfg.rate_hz, cfg.window_length, cfg.source_overlap);
  const data::ChannelStats stats = data::compute_norm_stats(source);
  source = data::normalize(source, stats);

  data::WindowSet target_raw =
      cfg.protocol.criterion == Criterion::rate_mismatch
          ? eval::rate_mismatch_variant(target_ds, p.at("use_native").get<bool>(), cfg.window_length,
                                        cfg.target_overlap, cfg.rate_hz)
          : windows_at_rate(target_ds, cfg.rate_hz, cfg.window_length, cfg.target_overlap);
  const eval::NormSource mode = cfg.protocol.criterion == Criterion::norm_source_ablation
                                    ? eval::parse_norm_source(p.at("mode").get<std::string>())
                                    : eval::NormSource::source;
  out.target = eval::norm_ablation(target_raw, stats, mode);

  switch (cfg.protocol.criterion) {
    case Criterion::user_quantity: {
      const auto u = source.users();
      const auto keep = eval::subsample_users({u.begin(), u.end()}, p.at("pct").get<double>(), cfg.seed);
      source = source.filter_users({keep.begin(), keep.end()});
      break;
    }
    case Criterion::window_quantity:
      source = eval::subsample_windows(source, p.at("pct").get<double>(), cfg.seed);
      break;
    case Criterion::source_imbalance: {
      eval::ImbalanceSpec spec;
      spec.rho = p.at("rho").get<double>();
      spec.majority_count = p.value("majority_count", spec.majority_count);
      spec.num_classes = p.value("num_classes", source.num_classes());
      auto r = eval::imbalance_subsets(source, spec, cfg.seed);
      source = p.value("subset", std::string("imbalanced")) == "balanced" ? r.balanced : r.imbalanced;
      out.log = r.log;
      break;
    }
    case Criterion::limited_labels: {
      const int n = p.at("n_per_class").get<int>();
      out.train_filter = [n](const data::WindowSet& ws, std::uint64_t seed) {
        return eval::limited_label_subset(ws, n, seed);
      };
      break;
    }
    default: break;
  }
  out.source = std::move(source);
  return out;
}

namespace {

eval::MethodSpec method_spec(const ExperimentConfig& cfg, const std::string& name) {
  auto spec = eval::MethodSpec::parse(name);
  const std::string key = ssl::to_string(spec.pretext);
  if (spec.kind != eval::MethodSpec::Kind::baseline && cfg.encoders.contains(key)) spec.encoder = cfg.encoders[key];
  return spec;
}

std::vector<RunRecord> feature_space(const ExperimentConfig& cfg, const ProtocolData& data,
                                     const eval::MethodSpec& method, ResultStore& store, ExperimentResult& result) {
  using Clock = std::chrono::steady_clock;
  const std::string only = cfg.protocol.parameters.value("analysis", std::string());
  const train::HyperparamCombo combo{cfg.analysis_combo.get<std::map<std::string, Json>>(), 0};
  std::vector<RunRecord> out;
  for (std::uint64_t seed : cfg.seeds) {
    Json tags = cfg.protocol.parameters;
    tags["stage"] = "analysis";
    const std::string id = make_run_id(method.name(), data.target.dataset_id, "feature_space", -1, seed, combo, tags);
    if (auto existing = store.find(id)) {
      out.push_back(*existing);
      continue;
    }
    const auto t0 = Clock::now();
    RunRecord rec;
    rec.run_id = id;
    rec.method = method.name();
    rec.dataset_id = data.target.dataset_id;
    rec.criterion = "feature_space";
    rec.seed = seed;
    rec.combo = combo;
    rec.tags = tags;
    rec.data_hash = data::content_hash(data.source) + "/" + data::content_hash(data.target);
    try {
      auto [tr, val] = eval::pretrain_split(data.source, seed);
      auto pre = train::pretrain(method.pretext_config(), tr, val, eval::pretext_part(combo), cfg.pretrain_budget, seed);
      ++result.pretrained;
      if (pre.diverged) throw Error(pre.diagnostic);
      auto encoder = models::load_encoder(pre.checkpoint);
      const auto probe = analysis::probe_windows(data.target, cfg.probe_windows, seed);
      if (only.empty() || only == "cka") {
        const auto twin_ckpt = analysis::supervised_twin(pre.checkpoint.arch["encoder"], data.target, {}, combo,
                                                         cfg.finetune_budget, seed);
        auto twin = models::load_encoder(twin_ckpt);
        rec.metrics["cka"] = analysis::layerwise_similarity(*encoder, *twin, probe).to_json();
      }
      if (only.empty() || only == "separability") {
        rec.metrics["separability"] =
            analysis::separability_gap(pre.checkpoint, data.target, combo, cfg.finetune_budget, seed).to_json();
      }
      if (only.empty() || only == "dimensionality") {
        rec.metrics["variance_curve"] = analysis::implicit_dimensionality(analysis::pca_features(*encoder, probe).values);
      }
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.diagnostic = e.what();
      rec.metrics = Json::object();
    }
    ++result.trained;
    rec.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
    rec.created_at = utc_timestamp();
    store.append(rec);
    out.push_back(rec);
  }
  return out;
}

}  // namespace

ExperimentResult run(const ExperimentConfig& cfg, ResultStore& store) {
  cfg.validate();
  const ProtocolData data = prepare_protocol(cfg);
  ExperimentResult result;
  Json tags = cfg.protocol.parameters;
  for (const auto& name : cfg.methods) {
    const auto method = method_spec(cfg, name);
    if (cfg.protocol.criterion == eval::Criterion::feature_space) {
      const auto recs = feature_space(cfg, data, method, store, result);
      result.records.insert(result.records.end(), recs.begin(), recs.end());
      continue;
    }
    eval::CvConfig cv;
    cv.method = method;
    cv.head = models::parse_head(cfg.head);
    cv.pretrain_budget = cfg.pretrain_budget;
    cv.finetune_budget = cfg.finetune_budget;
    cv.seeds = cfg.seeds;
    cv.search_seed = cfg.seed;
    cv.criterion = eval::to_string(cfg.protocol.criterion);
    cv.protocol_tags = tags;
    cv.train_filter = data.train_filter;
    cv.workers = cfg.workers;
    const auto plan = data::make_user_folds(data.target.users(), cfg.folds, cfg.val_fraction, cfg.seed);
    const auto combos = eval::search_combos(method, cfg.pretrain_combos, cfg.finetune_combos, cfg.seed);
    auto summary = eval::cross_validate(cv, data.source, data.target, plan, combos, &store);
    result.trained += summary.trained;
    result.pretrained += summary.pretrained;
    result.records.insert(result.records.end(), summary.records.begin(), summary.records.end());
    result.summaries.push_back(std::move(summary));
  }
  return result;
}

}  // namespace sslhar::results
