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

#include "sslhar/data/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "sslhar/errors.hpp"
#include "sslhar/random.hpp"

namespace sslhar::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kHeader = "t_s,ax,ay,az,label";
constexpr double kStdFloor = 1e-8;

double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError(where + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

SensorSequence read_user_file(const fs::path& file, const Dataset& meta, const DatasetSchema& schema) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open " + file.string());
  std::map<std::string, int, std::less<>> ids;
  for (std::size_t i = 0; i < meta.class_names.size(); ++i) ids[meta.class_names[i]] = static_cast<int>(i);

  SensorSequence seq;
  seq.user_id = file.stem().string().substr(5);
  seq.sample_rate_hz = meta.sample_rate_hz;
  seq.dataset_id = meta.dataset_id;
  seq.sensor_position = meta.sensor_position;

  std::string line;
  if (!std::getline(in, line)) throw DataError(file.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw FormatError(file.string() + ": expected header '" + kHeader + "'");

  std::vector<double> values;
  double prev_t = -INFINITY;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = file.filename().string() + ":" + std::to_string(row);
    auto cols = split_commas(line);
    if (cols.size() != 5) throw FormatError(where + ": expected 5 columns");
    const double t = parse_double(cols[0], where);
    if (!(t > prev_t)) throw DataError(where + ": timestamps are not strictly increasing");
    prev_t = t;
    for (int c = 1; c <= 3; ++c) values.push_back(parse_double(cols[static_cast<std::size_t>(c)], where));
    if (cols[4].empty()) {
      if (!schema.allow_unlabeled) throw SchemaError(where + ": unlabeled sample not allowed");
      seq.labels.push_back(kUnlabeled);
    } else {
      auto it = ids.find(cols[4]);
      if (it == ids.end()) throw SchemaError(where + ": label '" + std::string(cols[4]) + "' not in manifest");
      seq.labels.push_back(it->second);
    }
  }
  if (seq.labels.empty()) throw DataError(file.string() + ": no samples");
  seq.samples = Eigen::Map<Signal>(values.data(), static_cast<Eigen::Index>(seq.labels.size()), 3);
  seq.validate();
  return seq;
}

std::vector<double> flatten(const WindowSet& ws) {
  std::vector<double> out;
  out.reserve(ws.size() * static_cast<std::size_t>(ws.window_length_samples) * 3);
  for (const auto& w : ws.windows) out.insert(out.end(), w.values.data(), w.values.data() + w.values.size());
  return out;
}

}  // namespace

Dataset load_dataset(const fs::path& dir, const DatasetSchema& schema) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw FormatError("missing manifest.json in " + dir.string());
  json m;
  try {
    std::ifstream(manifest_path) >> m;
  } catch (const json::exception& e) {
    throw FormatError("manifest.json: " + std::string(e.what()));
  }
  Dataset ds;
  try {
    ds.dataset_id = m.at("dataset_id").get<std::string>();
    ds.sample_rate_hz = m.at("sample_rate_hz").get<double>();
    ds.sensor_position = parse_position(m.value("sensor_position", std::string("other")));
    ds.class_names = m.at("class_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError("manifest.json: " + std::string(e.what()));
  }
  if (!(ds.sample_rate_hz > 0.0)) throw FormatError("manifest.json: sample_rate_hz must be positive");
  if (schema.class_names && *schema.class_names != ds.class_names) {
    throw SchemaError("manifest classes differ from the expected schema");
  }
  if (schema.sample_rate_hz && std::abs(*schema.sample_rate_hz - ds.sample_rate_hz) > 1e-9) {
    throw SchemaError("manifest sample rate differs from the expected schema");
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("user_", 0) == 0 && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw FormatError("no user_<id>.csv files in " + dir.string());
  for (const auto& f : files) ds.sequences.push_back(read_user_file(f, ds, schema));
  return ds;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  json m = {{"dataset_id", ds.dataset_id},
            {"sample_rate_hz", ds.sample_rate_hz},
            {"sensor_position", to_string(ds.sensor_position)},
            {"class_names", ds.class_names}};
  std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
  for (const auto& seq : ds.sequences) {
    std::ofstream out(dir / ("user_" + seq.user_id + ".csv"));
    out << kHeader << '\n';
    out.precision(17);
    for (int i = 0; i < seq.length(); ++i) {
      out << i / seq.sample_rate_hz << ',' << seq.samples(i, 0) << ',' << seq.samples(i, 1) << ','
          << seq.samples(i, 2) << ',';
      const int y = seq.labels[static_cast<std::size_t>(i)];
      if (y >= 0) out << ds.class_names.at(static_cast<std::size_t>(y));
      out << '\n';
    }
    if (!out) throw Error("failed writing " + (dir / ("user_" + seq.user_id + ".csv")).string());
  }
}

SensorSequence resample(const SensorSequence& seq, double dst_hz) {
  seq.validate();
  if (!(dst_hz > 0.0)) throw ValidationError("target rate must be positive");
  const double src = seq.sample_rate_hz;
  if (dst_hz > src + 1e-9) throw UnsupportedError("upsampling is not supported");
  if (std::abs(dst_hz - src) <= 1e-9) return seq;

  const int T = seq.length();
  const int out_len = static_cast<int>(std::floor(T * dst_hz / src + 1e-9));
  if (out_len < 1) throw DataError("sequence too short to resample");
  SensorSequence out = seq;
  out.sample_rate_hz = dst_hz;
  out.samples.resize(out_len, 3);
  out.labels.assign(static_cast<std::size_t>(out_len), kUnlabeled);

  const double ratio = src / dst_hz;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) < 1e-9) {
    const int step = static_cast<int>(rounded);
    for (int i = 0; i < out_len; ++i) {
      out.samples.row(i) = seq.samples.row(i * step);
      out.labels[static_cast<std::size_t>(i)] = seq.labels[static_cast<std::size_t>(i * step)];
    }
    return out;
  }
  for (int i = 0; i < out_len; ++i) {
    const double pos = i * ratio;
    const int lo = std::min(static_cast<int>(std::floor(pos)), T - 1);
    const int hi = std::min(lo + 1, T - 1);
    const double frac = pos - lo;
    out.samples.row(i) = (1.0 - frac) * seq.samples.row(lo) + frac * seq.samples.row(hi);
    const int nearest = std::min(static_cast<int>(std::lround(pos)), T - 1);
    out.labels[static_cast<std::size_t>(i)] = seq.labels[static_cast<std::size_t>(nearest)];
  }
  return out;
}

Dataset resample(const Dataset& ds, double dst_hz) {
  Dataset out = ds;
  for (auto& s : out.sequences) s = resample(s, dst_hz);
  if (std::abs(dst_hz - ds.sample_rate_hz) > 1e-9) out.sample_rate_hz = dst_hz;
  return out;
}

int majority_label(const std::vector<int>& labels, int begin, int end) {
  std::map<int, int> counts;
  for (int i = begin; i < end; ++i) ++counts[labels[static_cast<std::size_t>(i)]];
  int best = kUnlabeled, best_count = -1;
  for (auto [label, count] : counts) {
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

WindowSet make_windows(const SensorSequence& seq, int length_samples, double overlap_fraction,
                       const std::vector<std::string>& class_names) {
  seq.validate();
  if (length_samples < 1) throw ValidationError("window length must be positive");
  if (overlap_fraction < 0.0 || overlap_fraction >= 1.0) throw ValidationError("overlap must lie in [0, 1)");
  const int T = seq.length();
  if (length_samples > T) {
    throw DataError("window length " + std::to_string(length_samples) + " exceeds sequence length " +
                    std::to_string(T) + " for user '" + seq.user_id + "'");
  }
  const int stride = std::max(1, static_cast<int>(std::lround(length_samples * (1.0 - overlap_fraction))));
  const int count = (T - length_samples) / stride + 1;

  WindowSet ws;
  ws.window_length_samples = length_samples;
  ws.overlap_fraction = overlap_fraction;
  ws.class_names = class_names;
  ws.dataset_id = seq.dataset_id;
  ws.sample_rate_hz = seq.sample_rate_hz;
  ws.windows.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int origin = i * stride;
    Window w;
    w.values = seq.samples.middleRows(origin, length_samples);
    w.label = majority_label(seq.labels, origin, origin + length_samples);
    w.user_id = seq.user_id;
    w.origin_index = origin;
    ws.windows.push_back(std::move(w));
  }
  return ws;
}

WindowSet make_windows(const Dataset& ds, int length_samples, double overlap_fraction) {
  WindowSet out;
  out.window_length_samples = length_samples;
  out.overlap_fraction = overlap_fraction;
  out.class_names = ds.class_names;
  out.dataset_id = ds.dataset_id;
  out.sample_rate_hz = ds.sample_rate_hz;
  for (const auto& seq : ds.sequences) {
    if (seq.length() < length_samples) continue;
    WindowSet part = make_windows(seq, length_samples, overlap_fraction, ds.class_names);
    out.windows.insert(out.windows.end(), std::make_move_iterator(part.windows.begin()),
                       std::make_move_iterator(part.windows.end()));
  }
  if (out.empty()) throw DataError("no sequence is long enough for the requested window length");
  return out;
}

ChannelStats compute_norm_stats(const WindowSet& ws) {
  if (ws.empty()) throw DataError("cannot compute statistics of an empty window set");
  Eigen::Array3d sum = Eigen::Array3d::Zero();
  Eigen::Array3d sq = Eigen::Array3d::Zero();
  double n = 0.0;
  for (const auto& w : ws.windows) {
    sum += w.values.colwise().sum().transpose().array();
    n += static_cast<double>(w.values.rows());
  }
  const Eigen::Array3d mean = sum / n;
  for (const auto& w : ws.windows) {
    sq += (w.values.rowwise() - mean.matrix().transpose()).array().square().colwise().sum().transpose();
  }
  ChannelStats s;
  s.source_dataset_id = ws.dataset_id;
  for (int c = 0; c < 3; ++c) {
    s.mean[static_cast<std::size_t>(c)] = mean[c];
    s.std[static_cast<std::size_t>(c)] = std::max(std::sqrt(sq[c] / n), kStdFloor);
  }
  return s;
}

namespace {

void check_stats(const ChannelStats& s) {
  for (int c = 0; c < 3; ++c) {
    const double sd = s.std[static_cast<std::size_t>(c)];
    if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(s.mean[static_cast<std::size_t>(c)])) {
      throw ValidationError("channel statistics must be finite with positive std");
    }
  }
}

}  // namespace

WindowSet normalize(const WindowSet& ws, const ChannelStats& stats) {
  check_stats(stats);
  WindowSet out = ws;
  const Eigen::RowVector3d mean(stats.mean[0], stats.mean[1], stats.mean[2]);
  const Eigen::RowVector3d inv(1.0 / stats.std[0], 1.0 / stats.std[1], 1.0 / stats.std[2]);
  for (auto& w : out.windows) w.values = ((w.values.rowwise() - mean).array().rowwise() * inv.array()).matrix();
  out.normalization = stats;
  return out;
}

WindowSet denormalize(const WindowSet& ws, const ChannelStats& stats) {
  check_stats(stats);
  WindowSet out = ws;
  const Eigen::RowVector3d mean(stats.mean[0], stats.mean[1], stats.mean[2]);
  const Eigen::RowVector3d sd(stats.std[0], stats.std[1], stats.std[2]);
  for (auto& w : out.windows) w.values = ((w.values.array().rowwise() * sd.array()).matrix().rowwise() + mean);
  out.normalization.reset();
  return out;
}

FoldPlan make_user_folds(const std::set<std::string>& users, int k, double val_fraction, std::uint64_t seed) {
  if (k < 1) throw ValidationError("fold count must be positive");
  if (static_cast<int>(users.size()) < k) {
    throw ValidationError("need at least " + std::to_string(k) + " users for " + std::to_string(k) + " folds");
  }
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw ValidationError("val_fraction must lie in [0, 1)");
  std::vector<std::string> order(users.begin(), users.end());
  Rng rng(seed);
  rng.shuffle(order);

  const int n = static_cast<int>(order.size());
  FoldPlan plan;
  plan.seed = seed;
  int start = 0;
  for (int f = 0; f < k; ++f) {
    const int size = n / k + (f < n % k ? 1 : 0);
    Fold fold;
    std::vector<std::string> rest;
    for (int i = 0; i < n; ++i) {
      if (i >= start && i < start + size) fold.test_users.insert(order[static_cast<std::size_t>(i)]);
      else rest.push_back(order[static_cast<std::size_t>(i)]);
    }
    start += size;
    Rng fold_rng(mix_seed(seed, static_cast<std::uint64_t>(f)));
    fold_rng.shuffle(rest);
    int n_val = static_cast<int>(std::ceil(val_fraction * static_cast<double>(rest.size()) - 1e-9));
    if (!rest.empty()) n_val = std::clamp(n_val, 1, static_cast<int>(rest.size()));
    for (std::size_t i = 0; i < rest.size(); ++i) {
      (static_cast<int>(i) < n_val ? fold.val_users : fold.train_users).insert(rest[i]);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

void save_windows(const WindowSet& ws, const fs::path& dir) {
  fs::create_directories(dir);
  json meta = {{"dataset_id", ws.dataset_id},
               {"sample_rate_hz", ws.sample_rate_hz},
               {"window_length_samples", ws.window_length_samples},
               {"overlap_fraction", ws.overlap_fraction},
               {"class_names", ws.class_names},
               {"count", ws.size()}};
  if (ws.normalization) {
    meta["normalization"] = {{"mean", ws.normalization->mean},
                             {"std", ws.normalization->std},
                             {"source_dataset_id", ws.normalization->source_dataset_id}};
  }
  json rows = json::array();
  for (const auto& w : ws.windows) rows.push_back({w.label, w.user_id, w.origin_index});
  meta["windows"] = std::move(rows);
  std::ofstream(dir / "windows.json") << meta.dump() << '\n';

  const std::vector<double> values = flatten(ws);
  std::ofstream bin(dir / "values.bin", std::ios::binary);
  bin.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!bin) throw Error("failed writing " + (dir / "values.bin").string());
}

WindowSet load_windows(const fs::path& dir) {
  const fs::path meta_path = dir / "windows.json";
  if (!fs::exists(meta_path)) throw FormatError("missing windows.json in " + dir.string());
  json meta;
  try {
    std::ifstream(meta_path) >> meta;
  } catch (const json::exception& e) {
    throw FormatError("windows.json: " + std::string(e.what()));
  }
  WindowSet ws;
  try {
    ws.dataset_id = meta.at("dataset_id").get<std::string>();
    ws.sample_rate_hz = meta.at("sample_rate_hz").get<double>();
    ws.window_length_samples = meta.at("window_length_samples").get<int>();
    ws.overlap_fraction = meta.at("overlap_fraction").get<double>();
    ws.class_names = meta.at("class_names").get<std::vector<std::string>>();
    if (meta.contains("normalization")) {
      const auto& n = meta["normalization"];
      ws.normalization = ChannelStats{n.at("mean").get<std::array<double, 3>>(), n.at("std").get<std::array<double, 3>>(),
                                      n.at("source_dataset_id").get<std::string>()};
    }
  } catch (const json::exception& e) {
    throw FormatError("windows.json: " + std::string(e.what()));
  }
  const auto& rows = meta.at("windows");
  const std::size_t L = static_cast<std::size_t>(ws.window_length_samples);
  const std::size_t expected = rows.size() * L * 3 * sizeof(double);
  const fs::path bin_path = dir / "values.bin";
  if (!fs::exists(bin_path) || fs::file_size(bin_path) != expected) {
    throw IntegrityError("values.bin size does not match windows.json");
  }
  std::vector<double> values(rows.size() * L * 3);
  std::ifstream bin(bin_path, std::ios::binary);
  bin.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(expected));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Window w;
    w.label = rows[i].at(0).get<int>();
    w.user_id = rows[i].at(1).get<std::string>();
    w.origin_index = rows[i].at(2).get<int>();
    w.values = Eigen::Map<const Signal>(values.data() + i * L * 3, static_cast<Eigen::Index>(L), 3);
    ws.windows.push_back(std::move(w));
  }
  return ws;
}

std::string content_hash(const WindowSet& ws) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& w : ws.windows) {
    feed(w.values.data(), static_cast<std::size_t>(w.values.size()) * sizeof(double));
    feed(&w.label, sizeof(w.label));
    feed(w.user_id.data(), w.user_id.size());
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace sslhar::data
