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

#include "sslhar/data/types.hpp"

#include "sslhar/errors.hpp"

namespace sslhar::data {

SensorPosition parse_position(const std::string& s) {
  if (s == "wrist") return SensorPosition::wrist;
  if (s == "waist") return SensorPosition::waist;
  if (s == "leg") return SensorPosition::leg;
  if (s == "other") return SensorPosition::other;
  throw SchemaError("unknown sensor_position '" + s + "'");
}

std::string to_string(SensorPosition p) {
  switch (p) {
    case SensorPosition::wrist: return "wrist";
    case SensorPosition::waist: return "waist";
    case SensorPosition::leg: return "leg";
    case SensorPosition::other: return "other";
  }
  return "other";
}

void SensorSequence::validate() const {
  if (samples.rows() < 1) throw DataError("sequence for user '" + user_id + "' is empty");
  if (labels.size() != static_cast<std::size_t>(samples.rows())) {
    throw DataError("sequence for user '" + user_id + "': label count differs from sample count");
  }
  if (!(sample_rate_hz > 0.0)) throw DataError("sample rate must be positive");
}

std::set<std::string> Dataset::users() const {
  std::set<std::string> out;
  for (const auto& s : sequences) out.insert(s.user_id);
  return out;
}

std::vector<int> WindowSet::labels() const {
  std::vector<int> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(w.label);
  return out;
}

std::set<std::string> WindowSet::users() const {
  std::set<std::string> out;
  for (const auto& w : windows) out.insert(w.user_id);
  return out;
}

WindowSet WindowSet::like() const {
  WindowSet out;
  out.window_length_samples = window_length_samples;
  out.overlap_fraction = overlap_fraction;
  out.class_names = class_names;
  out.normalization = normalization;
  out.dataset_id = dataset_id;
  out.sample_rate_hz = sample_rate_hz;
  return out;
}

WindowSet WindowSet::subset(const std::vector<std::size_t>& indices) const {
  WindowSet out = like();
  out.windows.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= windows.size()) throw ValidationError("window index out of range");
    out.windows.push_back(windows[i]);
  }
  return out;
}

WindowSet WindowSet::filter_users(const std::set<std::string>& keep) const {
  WindowSet out = like();
  for (const auto& w : windows) {
    if (keep.count(w.user_id)) out.windows.push_back(w);
  }
  return out;
}

std::vector<std::vector<std::size_t>> WindowSet::indices_by_class() const {
  std::vector<std::vector<std::size_t>> out(class_names.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const int y = windows[i].label;
    if (y >= 0 && y < static_cast<int>(out.size())) out[static_cast<std::size_t>(y)].push_back(i);
  }
  return out;
}

void WindowSet::append(const WindowSet& other) {
  if (other.empty()) return;
  if (empty() && window_length_samples == 0) {
    *this = other;
    return;
  }
  if (other.window_length_samples != window_length_samples) {
    throw ShapeError("cannot append windows of a different length");
  }
  windows.insert(windows.end(), other.windows.begin(), other.windows.end());
}

}  // namespace sslhar::data
