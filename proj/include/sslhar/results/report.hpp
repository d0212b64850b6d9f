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
#include <filesystem>
#include <string>
#include <vector>

#include "sslhar/results/store.hpp"

namespace sslhar::results {

enum class ReportView {
  transfer_table,
  sweep_curves,
  imbalance_bars,
  similarity_heatmap,
  variance_curves,
  separability_bars
};

inline constexpr std::array<ReportView, 6> kAllViews{ReportView::transfer_table,    ReportView::sweep_curves,
                                                     ReportView::imbalance_bars,    ReportView::similarity_heatmap,
                                                     ReportView::variance_curves,   ReportView::separability_bars};

std::string to_string(ReportView v);
/// Throws ValidationError on an unknown name.
ReportView parse_view(const std::string& s);

/// Writes <view>.csv and <view>.svg into `out_dir` from the ok records of
/// `records` and returns the two paths. An empty input yields a header-only
/// CSV and an empty plot.
std::vector<std::filesystem::path> report(const std::vector<RunRecord>& records, ReportView view,
                                          const std::filesystem::path& out_dir);

/// Reads the store at `store_path` and reports `view`.
std::vector<std::filesystem::path> report(const std::filesystem::path& store_path, ReportView view,
                                          const std::filesystem::path& out_dir);

}  // namespace sslhar::results
