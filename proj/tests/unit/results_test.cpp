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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "sslhar/errors.hpp"
#include "sslhar/results/experiment.hpp"
#include "sslhar/results/report.hpp"
#include "sslhar/results/store.hpp"
#include "support/temp_dir.hpp"

using namespace sslhar;
using namespace sslhar::results;

namespace {

RunRecord make_record(const std::string& method, int fold, std::uint64_t seed, double f1, const Json& combo_lr) {
  RunRecord r;
  r.method = method;
  r.dataset_id = "synthetic";
  r.criterion = "position_transfer";
  r.fold = fold;
  r.seed = seed;
  r.combo.values["class_lr"] = combo_lr;
  r.metrics = {{"macro_f1", f1}};
  r.created_at = utc_timestamp();
  r.run_id = make_run_id(r.method, r.dataset_id, r.criterion, fold, seed, r.combo, r.tags);
  return r;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ExperimentConfig small_experiment(const std::filesystem::path& out) {
  data::SyntheticSpec spec;
  spec.num_users = 4;
  spec.total_windows = 160;
  spec.window_length = 32;
  ExperimentConfig cfg;
  cfg.methods = {"conv_classifier", "random_init:autoencoder"};
  cfg.source.synthetic = spec;
  cfg.target.synthetic = spec;
  cfg.window_length = 32;
  cfg.target_overlap = 0.0;
  cfg.pretrain_budget = {2, 1, 64};
  cfg.finetune_budget = {2, 1, 64};
  cfg.pretrain_combos = 1;
  cfg.finetune_combos = 1;
  cfg.folds = 2;
  cfg.seeds = {0};
  cfg.seed = 0;
  cfg.encoders = {{"autoencoder", {{"kind", "autoencoder"}, {"filters", {4, 4}}}}};
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("run records round-trip and reject non-finite metrics") {
  const auto r = make_record("simclr", 2, 3, 0.75, 1e-3);
  const auto back = RunRecord::from_json(Json::parse(r.to_json().dump()));
  CHECK(back.run_id == r.run_id);
  CHECK(back.fold == 2);
  CHECK(back.seed == 3);
  CHECK(back.metrics["macro_f1"].get<double>() == 0.75);
  CHECK(back.combo.key() == r.combo.key());

  auto bad = r;
  bad.metrics["macro_f1"] = std::nan("");
  CHECK_THROWS(bad.validate());
  CHECK(make_run_id("a", "d", "c", 0, 1, r.combo, Json::object()) !=
        make_run_id("a", "d", "c", 0, 2, r.combo, Json::object()));
  CHECK(make_run_id("a", "d", "c", 0, 1, r.combo, {{"pct", 10}}) !=
        make_run_id("a", "d", "c", 0, 1, r.combo, {{"pct", 50}}));
}

TEST_CASE("concurrent writers never interleave lines") {
  test_support::TempDir dir;
  const auto path = dir.path() / "runs.jsonl";
  constexpr int kWriters = 8;
  constexpr int kRows = 1000;
  {
    std::vector<std::jthread> writers;
    for (int w = 0; w < kWriters; ++w) {
      writers.emplace_back([&, w] {
        for (int i = 0; i < kRows; ++i) {
          persist(make_record("w" + std::to_string(w), i % 5, static_cast<std::uint64_t>(i), 0.5, 1e-3), path);
        }
      });
    }
  }
  const auto contents = read_store(path);
  CHECK(contents.warnings.empty());
  REQUIRE(contents.records.size() == static_cast<std::size_t>(kWriters * kRows));
  std::set<std::string> ids;
  for (const auto& r : contents.records) ids.insert(r.run_id);
  CHECK(ids.size() == contents.records.size());
}

TEST_CASE("reader skips malformed lines with a warning") {
  test_support::TempDir dir;
  const auto path = dir.path() / "runs.jsonl";
  persist(make_record("a", 0, 1, 0.5, 1e-3), path);
  {
    std::ofstream out(path, std::ios::app);
    out << "{\"run_id\": \"trunc\n";
    out << "\n";
    out << "[1, 2, 3]\n";
  }
  persist(make_record("b", 0, 1, 0.6, 1e-3), path);
  const auto contents = read_store(path);
  CHECK(contents.records.size() == 2);
  CHECK(contents.warnings.size() == 2);

  ResultStore store(path);
  CHECK(store.records().size() == 2);
  CHECK(store.contains(contents.records[0].run_id));
  CHECK_FALSE(store.contains("missing"));
  CHECK(read_store(dir.path() / "absent.jsonl").records.empty());
}

TEST_CASE("store keeps the first record per id") {
  test_support::TempDir dir;
  const auto path = dir.path() / "runs.jsonl";
  auto r = make_record("a", 0, 1, 0.5, 1e-3);
  persist(r, path);
  r.metrics["macro_f1"] = 0.9;
  persist(r, path);
  ResultStore store(path);
  REQUIRE(store.records().size() == 1);
  CHECK(store.find(r.run_id)->metrics["macro_f1"].get<double>() == 0.5);
}

TEST_CASE("experiment config validation fails before any training") {
  test_support::TempDir dir;
  auto cfg = small_experiment(dir.path());
  CHECK_NOTHROW(cfg.validate());
  const auto back = ExperimentConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());

  auto j = cfg.to_json();
  j["protocol"]["criterion"] = "no_such_criterion";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ValidationError);
  j = cfg.to_json();
  j["bogus"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), SchemaError);

  auto bad = cfg;
  bad.methods = {"not_a_method"};
  CHECK_THROWS(bad.validate());
  bad = cfg;
  bad.protocol.criterion = eval::Criterion::user_quantity;
  bad.protocol.parameters = {{"pct", 250}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.protocol.criterion = eval::Criterion::feature_space;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  bad = cfg;
  bad.methods = {"not_a_method"};
  ResultStore store(dir.path() / "runs.jsonl");
  CHECK_THROWS(run(bad, store));
  CHECK(store.records().empty());
  CHECK_FALSE(std::filesystem::exists(dir.path() / "runs.jsonl"));
}

TEST_CASE("experiment run writes one record per method, fold and seed and resumes") {
  test_support::TempDir dir;
  const auto cfg = small_experiment(dir.path());
  const auto path = dir.path() / "runs.jsonl";
  ExperimentResult first;
  {
    ResultStore store(path);
    first = run(cfg, store);
  }
  CHECK(first.trained == 4);
  CHECK(first.pretrained == 0);
  const auto stored = read_store(path).records;
  CHECK(stored.size() == 4);
  std::set<std::pair<std::string, int>> cells;
  for (const auto& r : stored) {
    CHECK(r.status == "ok");
    CHECK(r.metrics.contains("macro_f1"));
    cells.insert({r.method, r.fold});
  }
  CHECK(cells.size() == 4);

  ResultStore again(path);
  const auto second = run(cfg, again);
  CHECK(second.trained == 0);
  CHECK(read_store(path).records.size() == 4);
  REQUIRE(second.summaries.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(second.summaries[i].final_f1.mean == first.summaries[i].final_f1.mean);
}

TEST_CASE("report views") {
  test_support::TempDir dir;
  for (auto v : kAllViews) {
    CHECK(parse_view(to_string(v)) == v);
    const auto files = report(std::vector<RunRecord>{}, v, dir.path() / "empty");
    REQUIRE(files.size() == 2);
    const auto rows = read_csv(files[0]);
    CHECK(rows.size() == 1);
    std::ifstream svg(files[1]);
    std::string text((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("</svg>") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_view("pie_chart"), ValidationError);

  // The re-run combo has the most seeds; the single-seed combo scores higher but is a search run.
  // Search runs of the re-run combo under seed 0 are not part of its final seeds.
  std::vector<RunRecord> records;
  for (std::uint64_t seed : {1, 2}) {
    for (int fold = 0; fold < 2; ++fold) {
      records.push_back(make_record("simclr", fold, seed, seed == 1 ? 0.6 : 0.8, 1e-3));
      records.back().tags = {{"stage", "final"}, {"final_seeds", {1, 2}}};
    }
  }
  for (int fold = 0; fold < 2; ++fold) {
    records.push_back(make_record("simclr", fold, 0, 0.95, 1e-2));
    records.push_back(make_record("simclr", fold, 0, 0.1, 1e-3));
    records.back().tags = {{"stage", "search"}};
  }
  const auto files = report(records, ReportView::transfer_table, dir.path() / "full");
  const auto rows = read_csv(files[0]);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[1].size() == 7);
  CHECK(rows[1][0] == "simclr");
  CHECK(std::stod(rows[1][3]) == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(std::stod(rows[1][4]) == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(rows[1][5] == "2");
  CHECK(rows[1][6] == "4");
}
