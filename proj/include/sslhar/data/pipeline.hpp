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

#include <filesystem>
#include <string>

#include "sslhar/data/types.hpp"

namespace sslhar::data {

Dataset load_dataset(const std::filesystem::path& dir, const DatasetSchema& schema = {});
/// Writes the canonical directory layout read by load_dataset.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

SensorSequence resample(const SensorSequence& seq, double dst_hz);
Dataset resample(const Dataset& ds, double dst_hz);

WindowSet make_windows(const SensorSequence& seq, int length_samples, double overlap_fraction,
                       const std::vector<std::string>& class_names = {});
WindowSet make_windows(const Dataset& ds, int length_samples, double overlap_fraction);

/// Majority label over [begin, end); ties go to the smallest id, -1 included.
int majority_label(const std::vector<int>& labels, int begin, int end);

ChannelStats compute_norm_stats(const WindowSet& ws);
WindowSet normalize(const WindowSet& ws, const ChannelStats& stats);
WindowSet denormalize(const WindowSet& ws, const ChannelStats& stats);

FoldPlan make_user_folds(const std::set<std::string>& users, int k = 5, double val_fraction = 0.2,
                         std::uint64_t seed = 0);

void save_windows(const WindowSet& ws, const std::filesystem::path& dir);
WindowSet load_windows(const std::filesystem::path& dir);

/// FNV-1a digest over values, labels and users, as 16 hex digits.
std::string content_hash(const WindowSet& ws);

}  // namespace sslhar::data
