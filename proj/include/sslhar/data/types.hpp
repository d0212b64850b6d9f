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

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sslhar::data {

/// Tri-axial samples, one row per timestep.
using Signal = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

inline constexpr int kChannels = 3;
inline constexpr int kUnlabeled = -1;

enum class SensorPosition { wrist, waist, leg, other };

SensorPosition parse_position(const std::string& s);
std::string to_string(SensorPosition p);

struct SensorSequence {
  std::string user_id;
  double sample_rate_hz = 0.0;
  Signal samples;
  std::vector<int> labels;
  std::string dataset_id;
  SensorPosition sensor_position = SensorPosition::other;

  int length() const { return static_cast<int>(samples.rows()); }
  /// Throws DataError when an invariant is violated.
  void validate() const;
};

struct Dataset {
  std::string dataset_id;
  double sample_rate_hz = 0.0;
  SensorPosition sensor_position = SensorPosition::other;
  std::vector<std::string> class_names;
  std::vector<SensorSequence> sequences;

  std::set<std::string> users() const;
};

struct ChannelStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};
  std::string source_dataset_id;
};

struct Window {
  Signal values;
  int label = kUnlabeled;
  std::string user_id;
  int origin_index = 0;
};

struct WindowSet {
  std::vector<Window> windows;
  int window_length_samples = 0;
  double overlap_fraction = 0.0;
  std::vector<std::string> class_names;
  std::optional<ChannelStats> normalization;
  std::string dataset_id;
  double sample_rate_hz = 0.0;

  std::size_t size() const { return windows.size(); }
  bool empty() const { return windows.empty(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  double window_seconds() const { return window_length_samples / sample_rate_hz; }

  std::vector<int> labels() const;
  std::set<std::string> users() const;
  /// Same metadata, no windows.
  WindowSet like() const;
  WindowSet subset(const std::vector<std::size_t>& indices) const;
  WindowSet filter_users(const std::set<std::string>& users) const;
  /// Windows grouped by label; unlabeled windows are dropped.
  std::vector<std::vector<std::size_t>> indices_by_class() const;
  void append(const WindowSet& other);
};

struct Fold {
  std::set<std::string> train_users;
  std::set<std::string> val_users;
  std::set<std::string> test_users;
};

struct FoldPlan {
  std::vector<Fold> folds;
  std::uint64_t seed = 0;
};

/// Optional constraints checked while loading a dataset directory.
struct DatasetSchema {
  /// When set, the manifest must list exactly these classes in this order.
  std::optional<std::vector<std::string>> class_names;
  std::optional<double> sample_rate_hz;
  bool allow_unlabeled = true;
};

}  // namespace sslhar::data
