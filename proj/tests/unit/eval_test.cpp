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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>

#include "sslhar/data/pipeline.hpp"
#include "sslhar/data/synthetic.hpp"
#include "sslhar/errors.hpp"
#include "sslhar/eval/cross_validate.hpp"
#include "sslhar/eval/metrics.hpp"
#include "sslhar/eval/protocols.hpp"
#include "sslhar/random.hpp"
#include "support/temp_dir.hpp"

using namespace sslhar;
using namespace sslhar::eval;

namespace {

// Counts pairs directly instead of building a matrix.
double oracle_macro_f1(const std::vector<int>& pred, const std::vector<int>& label, int C) {
  double total = 0.0;
  for (int c = 0; c < C; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == c && label[i] == c) tp += 1;
      if (pred[i] == c && label[i] != c) fp += 1;
      if (pred[i] != c && label[i] == c) fn += 1;
    }
    if (tp == 0) continue;
    const double p = tp / (tp + fp);
    const double r = tp / (tp + fn);
    total += 2 * p * r / (p + r);
  }
  return total / C;
}

std::vector<int> class_histogram(const data::WindowSet& ws, int C) {
  std::vector<int> h(static_cast<std::size_t>(C), 0);
  for (const auto& w : ws.windows) ++h[static_cast<std::size_t>(w.label)];
  return h;
}

std::vector<std::string> numbered_users(int n) {
  std::vector<std::string> users;
  for (int i = 0; i < n; ++i) users.push_back("user" + std::to_string(i));
  return users;
}

}  // namespace

TEST_CASE("macro F1 matches a counting oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int C = rng.uniform_int(2, 10);
    const int n = rng.uniform_int(1, 60);
    std::vector<int> pred, label;
    for (int i = 0; i < n; ++i) {
      label.push_back(rng.uniform_int(0, C - 1));
      pred.push_back(rng.bernoulli(0.4) ? label.back() : rng.uniform_int(0, C - 1));
    }
    REQUIRE(std::abs(macro_f1(pred, label, C) - oracle_macro_f1(pred, label, C)) <= 1e-9);
  }
}

TEST_CASE("macro F1 worked cases") {
  std::vector<int> label(100, 0);
  std::fill(label.begin() + 75, label.end(), 1);
  const std::vector<int> majority(100, 0);
  CHECK(macro_f1(majority, label, 2) == doctest::Approx(0.4286).epsilon(1e-4));
  CHECK(macro_f1(label, label, 2) == 1.0);
  CHECK(accuracy(majority, label) == doctest::Approx(0.75));
  const std::vector<int> bad{0, 2};
  const std::vector<int> ok{0, 1};
  CHECK_THROWS_AS(macro_f1(bad, ok, 2), ValidationError);
}

TEST_CASE("macro F1 is invariant under joint relabeling") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int C = rng.uniform_int(2, 8);
    std::vector<int> pred, label;
    for (int i = 0; i < 40; ++i) {
      pred.push_back(rng.uniform_int(0, C - 1));
      label.push_back(rng.uniform_int(0, C - 1));
    }
    const auto perm = rng.permutation(static_cast<std::size_t>(C));
    std::vector<int> p2, l2;
    for (int i = 0; i < 40; ++i) {
      p2.push_back(static_cast<int>(perm[static_cast<std::size_t>(pred[static_cast<std::size_t>(i)])]));
      l2.push_back(static_cast<int>(perm[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])]));
    }
    CHECK(macro_f1(p2, l2, C) == doctest::Approx(macro_f1(pred, label, C)).epsilon(1e-12));
  }
}

TEST_CASE("mean and std of repeated values") {
  const std::vector<double> same(5, 0.73);
  const MeanStd s = mean_std(same);
  CHECK(s.mean == doctest::Approx(0.73));
  CHECK(s.std == 0.0);
  const std::vector<double> two{1.0, 3.0};
  CHECK(mean_std(two).std == doctest::Approx(1.0));
}

TEST_CASE("imbalance counts follow the exponential law") {
  ImbalanceSpec spec;
  CHECK(imbalance_counts(spec) == std::vector<int>{20000, 7962, 3170, 1262, 502, 200});
  auto total = [&](double rho) {
    spec.rho = rho;
    const auto c = imbalance_counts(spec);
    return std::accumulate(c.begin(), c.end(), 0);
  };
  CHECK(total(0.01) == 33096);
  CHECK(std::abs(total(0.1) - 51000) <= 510);
  CHECK(total(1.0) == 6 * 20000);
  spec.num_classes = 1;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("imbalanced and balanced subsets") {
  const auto pool = data::make_synthetic_windows(4, 6000, 4, 5);
  ImbalanceSpec spec;
  spec.rho = 0.1;
  spec.majority_count = 400;
  spec.num_classes = 4;
  const auto r = imbalance_subsets(pool, spec, 9);
  const auto expected = imbalance_counts(spec);
  const auto hist = class_histogram(r.imbalanced, 4);
  for (std::size_t k = 0; k < expected.size(); ++k) {
    CHECK(hist[static_cast<std::size_t>(r.class_order[k])] == expected[k]);
  }
  const int total = std::accumulate(expected.begin(), expected.end(), 0);
  CHECK(std::abs(static_cast<int>(r.balanced.size()) - total) <= 4);
  for (int h : class_histogram(r.balanced, 4)) CHECK(h == r.balanced_per_class);
  CHECK_FALSE(r.with_replacement);
  std::set<std::size_t> seen;
  for (const auto& w : r.imbalanced.windows) CHECK(seen.insert(w.origin_index).second);
  const auto again = imbalance_subsets(pool, spec, 9);
  CHECK(data::content_hash(again.imbalanced) == data::content_hash(r.imbalanced));
  CHECK(data::content_hash(again.balanced) == data::content_hash(r.balanced));

  spec.majority_count = 5000;
  const auto short_pool = imbalance_subsets(pool, spec, 9);
  CHECK(short_pool.with_replacement);
  CHECK_FALSE(short_pool.log.empty());
}

TEST_CASE("user sweep arithmetic") {
  const auto users = numbered_users(135);
  std::vector<std::size_t> got;
  for (double pct : {1.0, 5.0, 10.0, 25.0, 50.0, 100.0}) got.push_back(subsample_users(users, pct, 1).size());
  CHECK(got == std::vector<std::size_t>{1, 6, 13, 33, 67, 135});
  CHECK(subsample_users(users, 25, 4) == subsample_users(users, 25, 4));
  auto all = subsample_users(users, 100, 4);
  auto sorted = users;
  std::sort(sorted.begin(), sorted.end());
  CHECK(all == sorted);
}

TEST_CASE("window subsampling") {
  CHECK(subsample_count(4100000, 0.01) == 410);
  CHECK(subsample_count(10, 0.01) == 1);
  const auto ws = data::make_synthetic_windows(6, 100000, 1, 21);
  const auto sub = subsample_windows(ws, 0.1, 8);
  REQUIRE(sub.size() == 100);
  const auto full = class_histogram(ws, 6);
  // A single 100-window draw is too noisy for a 2pp band; the band is checked on the mean of many draws.
  std::vector<double> mean(6, 0.0);
  const int draws = 200;
  for (int d = 0; d < draws; ++d) {
    const auto h = class_histogram(subsample_windows(ws, 0.1, 1000 + static_cast<std::uint64_t>(d)), 6);
    for (int c = 0; c < 6; ++c) mean[static_cast<std::size_t>(c)] += h[static_cast<std::size_t>(c)] / 100.0 / draws;
  }
  for (int c = 0; c < 6; ++c) {
    CHECK(std::abs(mean[static_cast<std::size_t>(c)] - full[static_cast<std::size_t>(c)] / 100000.0) < 0.02);
  }
  CHECK(subsample_windows(ws, 100, 3).size() == ws.size());
  std::set<std::size_t> seen;
  for (const auto& w : sub.windows) CHECK(seen.insert(w.origin_index).second);
}

TEST_CASE("limited labels") {
  const auto ws = data::make_synthetic_windows(6, 600, 2, 2);
  CHECK(limited_label_subset(ws, 2, 1).size() == 12);
  for (int h : class_histogram(limited_label_subset(ws, 5, 1), 6)) CHECK(h == 5);
  CHECK(data::content_hash(limited_label_subset(ws, 5, 3)) == data::content_hash(limited_label_subset(ws, 5, 3)));

  std::vector<std::size_t> keep;
  bool kept_zero = false;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (ws.windows[i].label != 0 || !kept_zero) keep.push_back(i);
    if (ws.windows[i].label == 0) kept_zero = true;
  }
  std::vector<std::string> log;
  const auto scarce = limited_label_subset(ws.subset(keep), 5, 1, &log);
  CHECK(class_histogram(scarce, 6)[0] == 1);
  CHECK(log.size() == 1);
}

TEST_CASE("rate mismatch variants") {
  auto make = [](double hz) {
    data::SyntheticSpec spec;
    spec.sample_rate_hz = hz;
    spec.total_windows = 60;
    spec.window_length = 200;
    return data::make_synthetic(spec);
  };
  const auto d200 = make(200);
  const auto native = rate_mismatch_variant(d200, true);
  CHECK(native.window_length_samples == 100);
  CHECK(native.window_length_samples / native.sample_rate_hz == doctest::Approx(0.5));
  const auto down = rate_mismatch_variant(d200, false);
  CHECK(down.sample_rate_hz == 50.0);
  CHECK(down.window_length_samples / down.sample_rate_hz == doctest::Approx(2.0));
  const auto d100 = rate_mismatch_variant(make(100), true);
  CHECK(d100.window_length_samples / d100.sample_rate_hz == doctest::Approx(1.0));
  const auto d50 = make(50);
  CHECK(data::content_hash(rate_mismatch_variant(d50, true)) == data::content_hash(rate_mismatch_variant(d50, false)));
}

TEST_CASE("normalization source ablation") {
  data::SyntheticSpec spec;
  spec.total_windows = 120;
  const auto raw = data::make_windows(data::make_synthetic(spec), 100, 0.0);
  spec.seed = 99;
  spec.dataset_id = "other";
  const auto src = data::make_windows(data::make_synthetic(spec), 100, 0.0);
  const auto src_stats = data::compute_norm_stats(src);

  const auto by_source = norm_ablation(raw, src_stats, NormSource::source);
  REQUIRE(by_source.normalization);
  CHECK(by_source.normalization->source_dataset_id == "other");
  const auto by_target = norm_ablation(raw, src_stats, NormSource::target);
  CHECK(data::content_hash(by_source) != data::content_hash(by_target));
  const auto own = data::compute_norm_stats(raw);
  CHECK(data::content_hash(norm_ablation(raw, own, NormSource::source)) == data::content_hash(by_target));
  CHECK_THROWS_AS(norm_ablation(by_target, src_stats, NormSource::source), ValidationError);
  CHECK(parse_norm_source("target") == NormSource::target);
  CHECK_THROWS_AS(parse_norm_source("mixed"), ValidationError);
}

TEST_CASE("protocol configs validate per criterion") {
  for (Criterion c : kAllCriteria) CHECK(parse_criterion(to_string(c)) == c);
  CHECK_THROWS_AS(parse_criterion("leaderboard"), ValidationError);
  ProtocolConfig cfg;
  cfg.criterion = Criterion::user_quantity;
  cfg.parameters = {{"pct", 10}};
  CHECK_NOTHROW(cfg.validate());
  cfg.parameters = {{"pct", 0}};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.criterion = Criterion::source_imbalance;
  cfg.parameters = {{"rho", 0.01}};
  CHECK_NOTHROW(cfg.validate());
  const auto back = ProtocolConfig::from_json(cfg.to_json());
  CHECK(back.criterion == cfg.criterion);
  CHECK(back.parameters == cfg.parameters);
}

TEST_CASE("method names round trip") {
  for (const char* n : {"multitask", "simclr", "random_init:cpc", "conv_classifier", "random_init"}) {
    const auto m = MethodSpec::parse(n);
    CHECK(MethodSpec::parse(m.name()).name() == m.name());
  }
  CHECK(MethodSpec::parse("random_init").kind == MethodSpec::Kind::random_init);
  CHECK_THROWS(MethodSpec::parse("random_initx"));
}

TEST_CASE("cross validation record accounting and resume") {
  data::SyntheticSpec spec;
  spec.total_windows = 180;
  spec.window_length = 32;
  auto ws = data::make_windows(data::make_synthetic(spec), 32, 0.0);
  ws = data::normalize(ws, data::compute_norm_stats(ws));
  const auto plan = data::make_user_folds(ws.users(), 3, 0.2, 1);

  CvConfig cfg;
  cfg.method = MethodSpec::parse("autoencoder");
  cfg.method.encoder = {{"kind", "autoencoder"}, {"filters", {4, 4}}};
  cfg.pretrain_budget = {2, 1, 64};
  cfg.finetune_budget = {2, 1, 64};
  cfg.seeds = {0, 1};
  train::HyperparamSpace space;
  space.values["lr"] = {1e-3, 5e-4};
  space.values["class_lr"] = {1e-3, 1e-2};
  const auto combos = train::draw_combos(space, 3, 4);
  REQUIRE(combos.size() == 3);

  test_support::TempDir dir;
  const auto path = dir.path() / "runs.jsonl";
  CvSummary first;
  {
    results::ResultStore store(path);
    first = cross_validate(cfg, ws, ws, plan, combos, &store);
  }
  CHECK(first.records.size() == 3 * 3 + 2 * 3);
  // Seed 0 of the final stage is the search run itself.
  CHECK(first.trained == 3 * 3 + 3);
  CHECK(first.best_combo >= 0);
  const auto stored = results::read_store(path).records;
  CHECK(stored.size() == first.trained);
  std::set<std::string> ids;
  for (const auto& r : stored) CHECK(ids.insert(r.run_id).second);
  for (const auto& r : first.records) CHECK(ids.count(r.run_id) == 1);

  results::ResultStore again(path);
  const auto second = cross_validate(cfg, ws, ws, plan, combos, &again);
  CHECK(second.trained == 0);
  CHECK(second.pretrained == 0);
  CHECK(second.best_combo == first.best_combo);
  CHECK(second.final_f1.mean == first.final_f1.mean);
  CHECK(results::read_store(path).records.size() == stored.size());

  const auto fresh = cross_validate(cfg, ws, ws, plan, combos);
  CHECK(fresh.combo_mean_f1 == first.combo_mean_f1);
  CHECK(fresh.final_f1.mean == first.final_f1.mean);

  cfg.seeds = {3, 3};
  const auto twins = cross_validate(cfg, ws, ws, plan, combos);
  CHECK(twins.final_f1.std == 0.0);
}

TEST_CASE("cross validation workers agree with a single worker") {
  data::SyntheticSpec spec;
  spec.total_windows = 150;
  spec.window_length = 32;
  auto ws = data::make_windows(data::make_synthetic(spec), 32, 0.0);
  ws = data::normalize(ws, data::compute_norm_stats(ws));
  const auto plan = data::make_user_folds(ws.users(), 3, 0.2, 2);
  CvConfig cfg;
  cfg.method = MethodSpec::parse("conv_classifier");
  cfg.finetune_budget = {2, 1, 64};
  cfg.seeds = {0, 1};
  const auto combos = train::draw_combos(train::baseline_space(models::BaselineKind::conv_classifier), 2, 1);
  const auto one = cross_validate(cfg, {}, ws, plan, combos);
  cfg.workers = 3;
  const auto many = cross_validate(cfg, {}, ws, plan, combos);
  CHECK(one.combo_mean_f1 == many.combo_mean_f1);
  CHECK(one.final_f1.mean == many.final_f1.mean);
  CHECK(one.pretrained == 0);
}
