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

#include "sslhar/results/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>

#include "sslhar/data/pipeline.hpp"
#include "sslhar/errors.hpp"

namespace sslhar::results {

namespace {

void check_finite(const Json& j, const std::string& path) {
  if (j.is_number_float() && !std::isfinite(j.get<double>())) {
    throw ValidationError("metric '" + path + "' is not finite");
  }
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) check_finite(v, path.empty() ? k : path + "." + k);
  }
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) check_finite(j[i], path + "[" + std::to_string(i) + "]");
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

void RunRecord::validate() const {
  if (run_id.empty()) throw ValidationError("run record without run_id");
  if (status != "ok" && status != "failed") throw ValidationError("run status must be ok or failed");
  if (!metrics.is_object()) throw ValidationError("metrics must be an object");
  check_finite(metrics, "");
  if (!std::isfinite(wall_time_s)) throw ValidationError("wall time is not finite");
}

Json RunRecord::to_json() const {
  return {{"run_id", run_id},       {"method", method},   {"dataset_id", dataset_id},
          {"criterion", criterion}, {"fold", fold},       {"seed", seed},
          {"combo", combo.to_json()}, {"metrics", metrics}, {"wall_time_s", wall_time_s},
          {"data_hash", data_hash}, {"created_at", created_at}, {"status", status},
          {"diagnostic", diagnostic}, {"tags", tags}};
}

RunRecord RunRecord::from_json(const Json& j) {
  RunRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.method = j.value("method", "");
  r.dataset_id = j.value("dataset_id", "");
  r.criterion = j.value("criterion", "");
  r.fold = j.value("fold", -1);
  r.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("combo")) r.combo = train::HyperparamCombo::from_json(j["combo"]);
  r.metrics = j.value("metrics", Json::object());
  r.wall_time_s = j.value("wall_time_s", 0.0);
  r.data_hash = j.value("data_hash", "");
  r.created_at = j.value("created_at", "");
  r.status = j.value("status", "ok");
  r.diagnostic = j.value("diagnostic", "");
  r.tags = j.value("tags", Json::object());
  r.validate();
  return r;
}

std::string make_run_id(const std::string& method, const std::string& dataset_id, const std::string& criterion,
                        int fold, std::uint64_t seed, const train::HyperparamCombo& combo, const Json& tags) {
  const Json key = {method, dataset_id, criterion, fold, seed, combo.key(), tags};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(key.dump())));
  return method + "-" + buf;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void persist(const RunRecord& record, const std::filesystem::path& store_path) {
  record.validate();
  const std::string line = record.to_json().dump() + "\n";
  if (store_path.has_parent_path()) std::filesystem::create_directories(store_path.parent_path());
  const int fd = ::open(store_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot open store " + store_path.string() + ": " + std::strerror(errno));
  struct Closer {
    int fd;
    ~Closer() {
      ::flock(fd, LOCK_UN);
      ::close(fd);
    }
  } closer{fd};
  if (::flock(fd, LOCK_EX) != 0) throw Error("cannot lock store " + store_path.string());
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("write to store failed: " + std::string(std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
}

StoreContents read_store(const std::filesystem::path& store_path) {
  StoreContents out;
  std::ifstream in(store_path);
  if (!in) return out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.records.push_back(RunRecord::from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      out.warnings.push_back(store_path.string() + ":" + std::to_string(lineno) + ": skipped malformed record (" +
                             e.what() + ")");
    }
  }
  return out;
}

ResultStore::ResultStore(std::filesystem::path path) : path_(std::move(path)) {
  auto contents = read_store(path_);
  warnings_ = std::move(contents.warnings);
  for (auto& r : contents.records) {
    if (ids_.insert(r.run_id).second) records_.push_back(std::move(r));
  }
}

bool ResultStore::contains(const std::string& run_id) const {
  std::lock_guard lock(mu_);
  return ids_.count(run_id) != 0;
}

std::optional<RunRecord> ResultStore::find(const std::string& run_id) const {
  std::lock_guard lock(mu_);
  for (const auto& r : records_) {
    if (r.run_id == run_id) return r;
  }
  return std::nullopt;
}

void ResultStore::append(const RunRecord& record) {
  std::lock_guard lock(mu_);
  persist(record, path_);
  if (ids_.insert(record.run_id).second) records_.push_back(record);
}

std::vector<RunRecord> ResultStore::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

}  // namespace sslhar::results
