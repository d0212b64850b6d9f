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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sslhar/data/pipeline.hpp"
#include "sslhar/data/synthetic.hpp"
#include "sslhar/errors.hpp"
#include "sslhar/random.hpp"

using namespace sslhar;
using namespace sslhar::data;
namespace fs = std::filesystem;

namespace {

SensorSequence ramp_sequence(int T, double hz, std::vector<int> labels = {}) {
  SensorSequence s;
  s.user_id = "a";
  s.sample_rate_hz = hz;
  s.samples.resize(T, 3);
  for (int i = 0; i < T; ++i) s.samples.row(i) << i, 2.0 * i, -i;
  s.labels = labels.empty() ? std::vector<int>(static_cast<std::size_t>(T), 0) : std::move(labels);
  return s;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("sslhar_data_" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

const char* kManifest =
    R"({"dataset_id":"toy","sample_rate_hz":50,"sensor_position":"wrist",)"
    R"("class_names":["walk","run","sit","stand","lie","bike"]})";

WindowSet random_windows(int n, int L, Rng& rng, double offset = 0.0, double scale = 1.0) {
  WindowSet ws;
  ws.window_length_samples = L;
  ws.class_names = {"x"};
  for (int i = 0; i < n; ++i) {
    Window w;
    w.values = Signal(L, 3);
    for (int t = 0; t < L; ++t)
      for (int c = 0; c < 3; ++c) w.values(t, c) = offset + c + scale * (c + 1) * rng.normal();
    w.label = 0;
    w.user_id = "u";
    ws.windows.push_back(w);
  }
  return ws;
}

}  // namespace

TEST_CASE("load_dataset reads the canonical directory") {
  TempDir dir;
  write_text(dir.path / "manifest.json", kManifest);
  write_text(dir.path / "user_1.csv", "t_s,ax,ay,az,label\n0,1,2,3,walk\n0.02,1,2,3,run\n0.04,0,0,1,\n");
  write_text(dir.path / "user_2.csv", "t_s,ax,ay,az,label\n0,1,2,3,bike\n");
  Dataset ds = load_dataset(dir.path);
  CHECK(ds.sequences.size() == 2);
  CHECK(ds.class_names.size() == 6);
  CHECK(ds.sequences[0].user_id == "1");
  CHECK(ds.sequences[0].labels == std::vector<int>{0, 1, kUnlabeled});
  CHECK(ds.sequences[0].samples(2, 2) == 1.0);
  CHECK(ds.sequences[1].labels == std::vector<int>{5});
  CHECK(ds.sensor_position == SensorPosition::wrist);
}

TEST_CASE("load_dataset reports malformed input") {
  TempDir dir;
  SUBCASE("missing manifest") {
    write_text(dir.path / "user_1.csv", "t_s,ax,ay,az,label\n0,1,2,3,walk\n");
    CHECK_THROWS_AS(load_dataset(dir.path), FormatError);
  }
  SUBCASE("unknown label") {
    write_text(dir.path / "manifest.json", kManifest);
    write_text(dir.path / "user_1.csv", "t_s,ax,ay,az,label\n0,1,2,3,swim\n");
    CHECK_THROWS_AS(load_dataset(dir.path), SchemaError);
  }
  SUBCASE("empty user file") {
    write_text(dir.path / "manifest.json", kManifest);
    write_text(dir.path / "user_1.csv", "t_s,ax,ay,az,label\n");
    CHECK_THROWS_AS(load_dataset(dir.path), DataError);
  }
  SUBCASE("non-monotonic timestamps") {
    write_text(dir.path / "manifest.json", kManifest);
    write_text(dir.path / "user_1.csv", "t_s,ax,ay,az,label\n0.1,1,2,3,walk\n0.05,1,2,3,walk\n");
    CHECK_THROWS_AS(load_dataset(dir.path), DataError);
  }
}

TEST_CASE("write_dataset round-trips through load_dataset") {
  TempDir dir;
  SyntheticSpec spec;
  spec.total_windows = 60;
  spec.num_users = 3;
  Dataset ds = make_synthetic(spec);
  write_dataset(ds, dir.path);
  Dataset back = load_dataset(dir.path);
  REQUIRE(back.sequences.size() == 3);
  CHECK(back.class_names == ds.class_names);
  CHECK(back.sequences[1].labels == ds.sequences[1].labels);
  CHECK((back.sequences[1].samples - ds.sequences[1].samples).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("resample decimates and rejects upsampling") {
  SensorSequence s = ramp_sequence(400, 200.0);
  SensorSequence d = resample(s, 50.0);
  CHECK(d.length() == 100);
  CHECK(d.samples(3, 0) == 12.0);
  CHECK(d.sample_rate_hz == 50.0);

  SensorSequence daphnet = ramp_sequence(128, 64.0);
  SensorSequence same = resample(daphnet, 64.0);
  CHECK(same.length() == 128);
  CHECK(same.samples == daphnet.samples);

  CHECK_THROWS_AS(resample(ramp_sequence(10, 100.0), 200.0), UnsupportedError);

  SensorSequence odd = resample(ramp_sequence(300, 100.0), 30.0);
  CHECK(odd.length() == 90);
  CHECK(odd.samples(1, 0) == doctest::Approx(100.0 / 30.0));
  CHECK(resample(s, 50.0).samples == d.samples);
}

TEST_CASE("make_windows follows the stride arithmetic") {
  SensorSequence s = ramp_sequence(200, 50.0);
  WindowSet half = make_windows(s, 100, 0.5);
  REQUIRE(half.size() == 3);
  CHECK(half.windows[0].origin_index == 0);
  CHECK(half.windows[1].origin_index == 50);
  CHECK(half.windows[2].origin_index == 100);
  CHECK(half.windows[2].values(0, 0) == 100.0);
  CHECK(make_windows(s, 100, 0.0).size() == 2);
  CHECK(half.window_seconds() == doctest::Approx(2.0));
  CHECK_THROWS_AS(make_windows(s, 201, 0.0), DataError);

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int T = rng.uniform_int(20, 500), L = rng.uniform_int(1, 20);
    const double ov = rng.uniform(0.0, 0.9);
    WindowSet ws = make_windows(ramp_sequence(T, 50.0), L, ov);
    const int stride = std::max(1, static_cast<int>(std::lround(L * (1 - ov))));
    CHECK(static_cast<int>(ws.size()) == (T - L) / stride + 1);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      CHECK(ws.windows[i].origin_index + L <= T);
      if (i > 0) CHECK(ws.windows[i].origin_index - ws.windows[i - 1].origin_index == stride);
    }
  }
}

TEST_CASE("window labels use majority with smallest-id ties") {
  CHECK(majority_label({2, 2, 1, 1}, 0, 4) == 1);
  CHECK(majority_label({2, 2, 2, 1}, 0, 4) == 2);
  CHECK(majority_label({-1, -1, 3}, 0, 3) == -1);
  CHECK(majority_label({-1, 0, 3, 3}, 0, 4) == 3);
}

TEST_CASE("channel statistics") {
  WindowSet zero;
  zero.window_length_samples = 4;
  zero.windows.push_back(Window{Signal::Zero(4, 3), 0, "u", 0});
  ChannelStats z = compute_norm_stats(zero);
  for (int c = 0; c < 3; ++c) {
    CHECK(z.mean[c] == 0.0);
    CHECK(z.std[c] == 1e-8);
  }
  WindowSet constant = zero;
  constant.windows[0].values.setConstant(2.5);
  CHECK(compute_norm_stats(constant).mean[1] == 2.5);
  CHECK_THROWS_AS(compute_norm_stats(WindowSet{}), DataError);

  Rng rng(5);
  WindowSet ws = random_windows(40, 25, rng, 3.0, 2.0);
  ws.dataset_id = "src";
  ChannelStats s = compute_norm_stats(ws);
  WindowSet n = normalize(ws, s);
  ChannelStats again = compute_norm_stats(n);
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(again.mean[c]) < 1e-6);
    CHECK(std::abs(again.std[c] - 1.0) < 1e-6);
  }
  REQUIRE(n.normalization.has_value());
  CHECK(n.normalization->source_dataset_id == "src");

  WindowSet back = denormalize(n, s);
  double worst = 0.0;
  for (std::size_t i = 0; i < ws.size(); ++i)
    worst = std::max(worst, (back.windows[i].values - ws.windows[i].values).cwiseAbs().maxCoeff());
  CHECK(worst < 1e-6);

  ChannelStats ident;
  CHECK(normalize(ws, ident).windows[3].values == ws.windows[3].values);

  WindowSet twice = normalize(n, s);
  const double expect = (n.windows[0].values(0, 1) - s.mean[1]) / s.std[1];
  CHECK(twice.windows[0].values(0, 1) == doctest::Approx(expect));
  CHECK(twice.windows[0].values(0, 1) != doctest::Approx(n.windows[0].values(0, 1)));
}

TEST_CASE("user folds partition the participants") {
  std::set<std::string> ten;
  for (int i = 0; i < 10; ++i) ten.insert("p" + std::to_string(i));
  FoldPlan plan = make_user_folds(ten, 5, 0.2, 11);
  REQUIRE(plan.folds.size() == 5);
  std::multiset<std::string> tested;
  for (const auto& f : plan.folds) {
    CHECK(f.test_users.size() == 2);
    tested.insert(f.test_users.begin(), f.test_users.end());
    for (const auto& u : f.test_users) {
      CHECK_FALSE(f.train_users.count(u));
      CHECK_FALSE(f.val_users.count(u));
    }
    for (const auto& u : f.val_users) CHECK_FALSE(f.train_users.count(u));
    CHECK(f.train_users.size() + f.val_users.size() + f.test_users.size() == 10);
  }
  CHECK(std::set<std::string>(tested.begin(), tested.end()) == ten);
  CHECK(tested.size() == 10);

  std::set<std::string> five{"a", "b", "c", "d", "e"};
  for (const auto& f : make_user_folds(five, 5, 0.2, 1).folds) {
    CHECK(f.test_users.size() == 1);
    CHECK(f.val_users.size() == 1);
    CHECK(f.train_users.size() == 3);
  }

  FoldPlan again = make_user_folds(ten, 5, 0.2, 11);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(again.folds[i].test_users == plan.folds[i].test_users);
    CHECK(again.folds[i].val_users == plan.folds[i].val_users);
  }
  CHECK_THROWS_AS(make_user_folds({"a", "b"}, 5), ValidationError);

  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    std::set<std::string> users;
    const int n = rng.uniform_int(3, 40), k = rng.uniform_int(2, std::min(n, 8));
    for (int i = 0; i < n; ++i) users.insert(std::to_string(i));
    FoldPlan p = make_user_folds(users, k, 0.2, rng.next_u64());
    std::size_t total = 0;
    for (const auto& f : p.folds) total += f.test_users.size();
    CHECK(total == users.size());
  }
}

TEST_CASE("window sets persist losslessly") {
  TempDir dir;
  Rng rng(9);
  WindowSet ws = random_windows(7, 12, rng);
  ws.normalization = compute_norm_stats(ws);
  save_windows(ws, dir.path);
  WindowSet back = load_windows(dir.path);
  REQUIRE(back.size() == 7);
  CHECK(back.windows[6].values == ws.windows[6].values);
  CHECK(back.normalization->std == ws.normalization->std);
  CHECK(content_hash(back) == content_hash(ws));
  fs::resize_file(dir.path / "values.bin", 100);
  CHECK_THROWS_AS(load_windows(dir.path), IntegrityError);
}

TEST_CASE("synthetic dataset has the requested shape") {
  Dataset ds = make_synthetic(SyntheticSpec{});
  CHECK(ds.sequences.size() == 6);
  WindowSet ws = make_windows(ds, 100, 0.0);
  CHECK(ws.size() == 2000);
  auto by_class = ws.indices_by_class();
  REQUIRE(by_class.size() == 3);
  for (const auto& idx : by_class) CHECK(idx.size() > 400);
  CHECK(content_hash(make_windows(make_synthetic(SyntheticSpec{}), 100, 0.0)) == content_hash(ws));
}
