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

#include "sslhar/eval/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sslhar/data/pipeline.hpp"
#include "sslhar/errors.hpp"
#include "sslhar/random.hpp"

namespace sslhar::eval {

namespace {

constexpr const char* kCriterionNames[] = {"position_transfer", "activity_transfer", "rate_mismatch",
                                           "user_quantity",     "window_quantity",   "source_imbalance",
                                           "limited_labels",    "norm_source_ablation", "feature_space"};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

double number_param(const Json& p, const std::string& name) {
  require(p.contains(name) && p[name].is_number(), "parameter '" + name + "' must be a number");
  return p[name].get<double>();
}

std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n - i - 1)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

std::string to_string(Criterion c) { return kCriterionNames[static_cast<int>(c)]; }

Criterion parse_criterion(const std::string& s) {
  for (Criterion c : kAllCriteria) {
    if (to_string(c) == s) return c;
  }
  throw ValidationError("unknown criterion '" + s + "'");
}

void ProtocolConfig::validate() const {
  require(parameters.is_object(), "protocol parameters must be an object");
  const Json& p = parameters;
  switch (criterion) {
    case Criterion::user_quantity:
    case Criterion::window_quantity: {
      const double pct = number_param(p, "pct");
      require(pct > 0.0 && pct <= 100.0, "pct must lie in (0, 100]");
      break;
    }
    case Criterion::source_imbalance: {
      ImbalanceSpec spec;
      spec.rho = number_param(p, "rho");
      spec.majority_count = p.value("majority_count", spec.majority_count);
      spec.num_classes = p.value("num_classes", spec.num_classes);
      spec.validate();
      if (p.contains("subset")) {
        require(p["subset"] == "imbalanced" || p["subset"] == "balanced", "subset must be imbalanced or balanced");
      }
      break;
    }
    case Criterion::limited_labels:
      require(p.contains("n_per_class") && p["n_per_class"].is_number_integer() && p["n_per_class"].get<int>() >= 1,
              "n_per_class must be a positive integer");
      break;
    case Criterion::rate_mismatch:
      require(p.contains("use_native") && p["use_native"].is_boolean(), "use_native must be a boolean");
      break;
    case Criterion::norm_source_ablation:
      require(p.contains("mode") && p["mode"].is_string(), "mode must be 'source' or 'target'");
      parse_norm_source(p["mode"].get<std::string>());
      break;
    case Criterion::feature_space:
      if (p.contains("analysis")) {
        const auto a = p["analysis"].get<std::string>();
        require(a == "cka" || a == "separability" || a == "dimensionality",
                "analysis must be cka, separability or dimensionality");
      }
      break;
    case Criterion::position_transfer:
    case Criterion::activity_transfer: break;
  }
}

Json ProtocolConfig::to_json() const { return {{"criterion", to_string(criterion)}, {"parameters", parameters}}; }

ProtocolConfig ProtocolConfig::from_json(const Json& j) {
  require(j.is_object() && j.contains("criterion"), "protocol needs a criterion");
  ProtocolConfig c;
  c.criterion = parse_criterion(j["criterion"].get<std::string>());
  c.parameters = j.value("parameters", Json::object());
  c.validate();
  return c;
}

void ImbalanceSpec::validate() const {
  require(rho > 0.0 && rho <= 1.0, "rho must lie in (0, 1]");
  require(majority_count >= 1, "majority_count must be positive");
  require(num_classes >= 2, "imbalance needs at least two classes");
}

std::vector<int> imbalance_counts(const ImbalanceSpec& spec) {
  spec.validate();
  const double beta = std::log(spec.rho) / (spec.num_classes - 1);
  std::vector<int> counts;
  for (int c = 1; c <= spec.num_classes; ++c) {
    // nearbyint rounds half to even under the default rounding mode.
    counts.push_back(static_cast<int>(std::nearbyint(spec.majority_count * std::exp(beta * (c - 1)))));
  }
  return counts;
}

ImbalanceResult imbalance_subsets(const data::WindowSet& pool, const ImbalanceSpec& spec, std::uint64_t seed) {
  ImbalanceResult out;
  out.counts = imbalance_counts(spec);
  const auto by_class = pool.indices_by_class();
  const int C = spec.num_classes;
  require(static_cast<int>(by_class.size()) >= C,
          "pool has " + std::to_string(by_class.size()) + " classes, imbalance needs " + std::to_string(C));
  Rng rng(seed);
  out.class_order = rng.permutation(static_cast<int>(by_class.size()));
  out.class_order.resize(static_cast<std::size_t>(C));

  long total = 0;
  for (int n : out.counts) total += n;
  out.balanced_per_class = static_cast<int>(std::nearbyint(static_cast<double>(total) / C));

  auto draw = [&](int cls, int want, std::vector<std::size_t>& into, const char* which) {
    const auto& avail = by_class[static_cast<std::size_t>(cls)];
    if (avail.empty()) throw DataError("class " + std::to_string(cls) + " has no windows");
    const auto need = static_cast<std::size_t>(want);
    if (need <= avail.size()) {
      for (std::size_t i : draw_without_replacement(avail.size(), need, rng)) into.push_back(avail[i]);
      return;
    }
    out.with_replacement = true;
    out.log.push_back(std::string(which) + ": class " + std::to_string(cls) + " has " +
                      std::to_string(avail.size()) + " windows, " + std::to_string(need) +
                      " requested; sampling with replacement");
    for (std::size_t i = 0; i < need; ++i) {
      into.push_back(avail[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(avail.size()) - 1))]);
    }
  };

  std::vector<std::size_t> imb, bal;
  for (int r = 0; r < C; ++r) draw(out.class_order[static_cast<std::size_t>(r)], out.counts[static_cast<std::size_t>(r)], imb, "imbalanced");
  for (int r = 0; r < C; ++r) draw(out.class_order[static_cast<std::size_t>(r)], out.balanced_per_class, bal, "balanced");
  out.imbalanced = pool.subset(imb);
  out.balanced = pool.subset(bal);
  return out;
}

std::size_t subsample_count(std::size_t n, double pct) {
  require(pct > 0.0 && pct <= 100.0, "pct must lie in (0, 100]");
  // The epsilon keeps exact products such as 10% of 130 from flooring to 12.
  const auto k = static_cast<std::size_t>(std::floor(pct * static_cast<double>(n) / 100.0 + 1e-9));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n, 1));
}

std::vector<std::string> subsample_users(const std::vector<std::string>& users, double pct, std::uint64_t seed) {
  require(!users.empty(), "no users to subsample");
  std::vector<std::string> sorted(users);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  Rng rng(seed);
  std::vector<std::string> out;
  for (std::size_t i : draw_without_replacement(sorted.size(), subsample_count(sorted.size(), pct), rng)) {
    out.push_back(sorted[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

data::WindowSet subsample_windows(const data::WindowSet& ws, double pct, std::uint64_t seed) {
  require(!ws.empty(), "no windows to subsample");
  Rng rng(seed);
  auto idx = draw_without_replacement(ws.size(), subsample_count(ws.size(), pct), rng);
  std::sort(idx.begin(), idx.end());
  return ws.subset(idx);
}

data::WindowSet limited_label_subset(const data::WindowSet& train, int n_per_class, std::uint64_t seed,
                                     std::vector<std::string>* log) {
  require(n_per_class >= 1, "n_per_class must be positive");
  const auto by_class = train.indices_by_class();
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& avail = by_class[c];
    if (avail.empty()) continue;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(n_per_class), avail.size());
    if (k < static_cast<std::size_t>(n_per_class) && log) {
      log->push_back("class " + std::to_string(c) + ": " + std::to_string(avail.size()) + " of " +
                     std::to_string(n_per_class) + " requested windows available");
    }
    Rng rng(mix_seed(seed, c));
    for (std::size_t i : draw_without_replacement(avail.size(), k, rng)) keep.push_back(avail[i]);
  }
  std::sort(keep.begin(), keep.end());
  return train.subset(keep);
}

data::WindowSet rate_mismatch_variant(const data::Dataset& ds, bool use_native, int window_length, double overlap,
                                      double target_hz) {
  if (use_native || ds.sample_rate_hz == target_hz) return data::make_windows(ds, window_length, overlap);
  return data::make_windows(data::resample(ds, target_hz), window_length, overlap);
}

NormSource parse_norm_source(const std::string& s) {
  if (s == "source") return NormSource::source;
  if (s == "target") return NormSource::target;
  throw ValidationError("normalization mode must be 'source' or 'target', got '" + s + "'");
}

std::string to_string(NormSource m) { return m == NormSource::source ? "source" : "target"; }

data::WindowSet norm_ablation(const data::WindowSet& target, const data::ChannelStats& source_stats, NormSource mode) {
  if (target.normalization) throw ValidationError("norm_ablation expects unnormalized target windows");
  if (mode == NormSource::source) return data::normalize(target, source_stats);
  data::ChannelStats own = data::compute_norm_stats(target);
  return data::normalize(target, own);
}

}  // namespace sslhar::eval
