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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "sslhar/data/types.hpp"
#include "sslhar/models/checkpoint.hpp"
#include "sslhar/train/engine.hpp"

namespace sslhar::analysis {

using Json = nlohmann::json;

/// Features of one layer over a probe set, one row per window.
struct FeatureMatrix {
  std::string layer_name;
  Eigen::MatrixXd values;

  /// At least 2 rows, at least one column, finite.
  void validate() const;
};

struct SimilarityMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> layer_names_a;
  std::vector<std::string> layer_names_b;

  Json to_json() const;
  static SimilarityMatrix from_json(const Json& j);
};

/// ||Yc^T Xc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F) on column-centred inputs.
/// Throws ValidationError on a row mismatch or a zero-variance input.
double linear_cka(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Seeded draw of up to `n` windows without replacement.
data::WindowSet probe_windows(const data::WindowSet& ws, std::size_t n, std::uint64_t seed);

/// Eval-mode layer outputs, each flattened to rows x (time * channels).
std::vector<FeatureMatrix> layer_features(models::Encoder& encoder, const data::WindowSet& probe);

/// Linear CKA between every layer of `a` and every layer of `b` on the same probe windows.
SimilarityMatrix layerwise_similarity(models::Encoder& a, models::Encoder& b, const data::WindowSet& probe);

/// Entry-wise mean of equally shaped matrices.
SimilarityMatrix mean_similarity(const std::vector<SimilarityMatrix>& runs);

/// Encoder of architecture `encoder_cfg` trained end-to-end with a linear head
/// (combo keys lr, weight_decay), as a checkpoint loadable by load_encoder.
models::ModelCheckpoint supervised_twin(const Json& encoder_cfg, const data::WindowSet& train,
                                        const data::WindowSet& val, const train::HyperparamCombo& combo,
                                        const train::TrainBudget& budget, std::uint64_t seed);

struct SeparabilityResult {
  double true_f1 = 0.0;
  double random_f1 = 0.0;
  double gap = 0.0;

  Json to_json() const;
};

/// Train-set F1 of a linear head fit to `labels` minus that of one fit to
/// `random_labels`, both on the same features and with the same combo.
SeparabilityResult separability_gap(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                    const std::vector<int>& random_labels, int num_classes,
                                    const train::HyperparamCombo& combo, const train::TrainBudget& budget,
                                    std::uint64_t seed);

/// Frozen-encoder variant; random labels are uniform over the class set, one draw per seed.
SeparabilityResult separability_gap(const models::ModelCheckpoint& encoder, const data::WindowSet& labeled,
                                    const train::HyperparamCombo& combo, const train::TrainBudget& budget,
                                    std::uint64_t seed);

/// Cumulative explained-variance fractions of the first `n` principal
/// components, truncated to the feature dimension. Requires rows > n.
std::vector<double> implicit_dimensionality(const Eigen::MatrixXd& features, int n = 20);

/// Eval-mode per-window features used for the principal-component analysis.
FeatureMatrix pca_features(models::Encoder& encoder, const data::WindowSet& probe);

Json curve_to_json(const std::string& name, const std::vector<double>& curve);

}  // namespace sslhar::analysis
