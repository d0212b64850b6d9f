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

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sslhar/train/hyperparams.hpp"

namespace sslhar::results {

using Json = nlohmann::json;

struct RunRecord {
  std::string run_id;
  std::string method;
  std::string dataset_id;
  std::string criterion;
  int fold = -1;
  std::uint64_t seed = 0;
  train::HyperparamCombo combo;
  /// macro_f1, per_class_f1, losses and similar; every number finite.
  Json metrics = Json::object();
  double wall_time_s = 0.0;
  std::string data_hash;
  std::string created_at;
  /// "ok" or "failed".
  std::string status = "ok";
  std::string diagnostic;
  /// Grouping keys such as stage, combo_index and protocol parameters.
  Json tags = Json::object();

  void validate() const;
  Json to_json() const;
  static RunRecord from_json(const Json& j);
};

/// Deterministic id derived from everything that identifies a run.
std::string make_run_id(const std::string& method, const std::string& dataset_id, const std::string& criterion,
                        int fold, std::uint64_t seed, const train::HyperparamCombo& combo, const Json& tags);

/// UTC time in ISO 8601.
std::string utc_timestamp();

/// Appends one JSON line with a single write under an exclusive lock.
void persist(const RunRecord& record, const std::filesystem::path& store_path);

struct StoreContents {
  std::vector<RunRecord> records;
  /// One entry per skipped line.
  std::vector<std::string> warnings;
};

/// Reads every well-formed line; malformed lines are skipped with a warning.
/// A missing file reads as empty.
StoreContents read_store(const std::filesystem::path& store_path);

/// Thread-safe view of a store file used by the orchestrator.
class ResultStore {
 public:
  explicit ResultStore(std::filesystem::path path);
  const std::filesystem::path& path() const { return path_; }
  bool contains(const std::string& run_id) const;
  /// Stored record with this id, if any.
  std::optional<RunRecord> find(const std::string& run_id) const;
  void append(const RunRecord& record);
  std::vector<RunRecord> records() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::vector<RunRecord> records_;
  std::set<std::string> ids_;
  std::vector<std::string> warnings_;
};

}  // namespace sslhar::results
