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

#include "sslhar/analysis/features.hpp"

#include <algorithm>
#include <cmath>

#include "sslhar/data/pipeline.hpp"
#include "sslhar/errors.hpp"
#include "sslhar/eval/metrics.hpp"
#include "sslhar/models/heads.hpp"
#include "sslhar/nn/ops.hpp"
#include "sslhar/nn/optim.hpp"

namespace sslhar::analysis {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kBatch = 256;

Eigen::MatrixXd flatten_rows(const nn::Tensor& t) {
  const auto& shape = t.shape();
  if (shape.empty()) throw ShapeError("cannot flatten a scalar");
  const Eigen::Index rows = shape[0];
  const Eigen::Index cols = static_cast<Eigen::Index>(nn::numel(shape)) / std::max<Eigen::Index>(rows, 1);
  return Eigen::Map<const RowMajor>(t.values().data(), rows, cols);
}

nn::Tensor to_tensor(const Eigen::MatrixXd& m) {
  const RowMajor r = m;
  return nn::Tensor({static_cast<int>(m.rows()), static_cast<int>(m.cols())},
                    nn::Buffer(r.data(), r.data() + r.size()));
}

std::vector<std::vector<std::size_t>> batches(std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += kBatch) {
    std::vector<std::size_t> b;
    for (std::size_t i = start; i < std::min(n, start + kBatch); ++i) b.push_back(i);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<int> labels_of(const data::WindowSet& ws, int C) {
  std::vector<int> y = ws.labels();
  for (int v : y) {
    if (v < 0 || v >= C) throw ValidationError("analysis needs labelled windows");
  }
  return y;
}

}  // namespace

void FeatureMatrix::validate() const {
  if (values.rows() < 2 || values.cols() < 1) throw ValidationError("feature matrix needs >= 2 rows and >= 1 column");
  if (!values.allFinite()) throw ValidationError("feature matrix '" + layer_name + "' has non-finite values");
}

Json SimilarityMatrix::to_json() const {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < values.cols(); ++j) row.push_back(values(i, j));
    rows.push_back(row);
  }
  return {{"layer_names_a", layer_names_a}, {"layer_names_b", layer_names_b}, {"values", rows}};
}

SimilarityMatrix SimilarityMatrix::from_json(const Json& j) {
  SimilarityMatrix m;
  m.layer_names_a = j.at("layer_names_a").get<std::vector<std::string>>();
  m.layer_names_b = j.at("layer_names_b").get<std::vector<std::string>>();
  const Json& rows = j.at("values");
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.layer_names_b.size()));
  if (rows.size() != m.layer_names_a.size()) throw SchemaError("similarity rows do not match layer names");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.layer_names_b.size()) throw SchemaError("similarity columns do not match layer names");
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k].get<double>();
    }
  }
  return m;
}

double linear_cka(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows()) throw ValidationError("linear_cka: row counts differ");
  if (x.rows() < 2) throw ValidationError("linear_cka: needs at least 2 rows");
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
  const double nx = (xc.transpose() * xc).norm();
  const double ny = (yc.transpose() * yc).norm();
  if (!(nx > 0.0) || !(ny > 0.0)) throw ValidationError("linear_cka: zero-variance features");
  const double cross = (yc.transpose() * xc).squaredNorm();
  return std::clamp(cross / (nx * ny), 0.0, 1.0);
}

data::WindowSet probe_windows(const data::WindowSet& ws, std::size_t n, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x9e0b));
  const auto perm = rng.permutation(ws.size());
  std::vector<std::size_t> order(perm.begin(), perm.begin() + static_cast<long>(std::min(n, perm.size())));
  std::sort(order.begin(), order.end());
  return ws.subset(order);
}

std::vector<FeatureMatrix> layer_features(models::Encoder& encoder, const data::WindowSet& probe) {
  if (probe.size() < 2) throw ValidationError("layer features need at least 2 probe windows");
  nn::NoGradGuard guard;
  encoder.set_training(false);
  Rng rng(0);
  std::vector<FeatureMatrix> out;
  for (const auto& b : batches(probe.size())) {
    const auto layers = encoder.layer_outputs(models::make_batch(probe, b), rng);
    if (out.empty()) {
      for (const auto& l : layers) out.push_back({l.name, Eigen::MatrixXd(static_cast<Eigen::Index>(probe.size()), 0)});
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const Eigen::MatrixXd part = flatten_rows(layers[k].value);
      Eigen::MatrixXd& dst = out[k].values;
      if (dst.cols() == 0) dst.resize(static_cast<Eigen::Index>(probe.size()), part.cols());
      dst.middleRows(static_cast<Eigen::Index>(b.front()), part.rows()) = part;
    }
  }
  for (const auto& f : out) f.validate();
  return out;
}

SimilarityMatrix layerwise_similarity(models::Encoder& a, models::Encoder& b, const data::WindowSet& probe) {
  const auto fa = layer_features(a, probe);
  const auto fb = layer_features(b, probe);
  SimilarityMatrix m;
  m.values.resize(static_cast<Eigen::Index>(fa.size()), static_cast<Eigen::Index>(fb.size()));
  for (const auto& f : fa) m.layer_names_a.push_back(f.layer_name);
  for (const auto& f : fb) m.layer_names_b.push_back(f.layer_name);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    for (std::size_t j = 0; j < fb.size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = linear_cka(fa[i].values, fb[j].values);
    }
  }
  return m;
}

SimilarityMatrix mean_similarity(const std::vector<SimilarityMatrix>& runs) {
  if (runs.empty()) throw ValidationError("no similarity matrices to average");
  SimilarityMatrix out = runs.front();
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i].values.rows() != out.values.rows() || runs[i].values.cols() != out.values.cols()) {
      throw ShapeError("similarity matrices differ in shape");
    }
    out.values += runs[i].values;
  }
  out.values /= static_cast<double>(runs.size());
  return out;
}

models::ModelCheckpoint supervised_twin(const Json& encoder_cfg, const data::WindowSet& train,
                                        const data::WindowSet& val, const train::HyperparamCombo& combo,
                                        const train::TrainBudget& budget, std::uint64_t seed) {
  budget.validate();
  if (train.empty()) throw ValidationError("supervised twin needs labelled windows");
  const int C = train::class_count(train);
  const std::vector<int> y = labels_of(train, C);
  const data::WindowSet& select = val.empty() ? train : val;
  const std::vector<int> select_y = labels_of(select, C);

  Rng rng(seed);
  auto encoder = models::make_encoder(encoder_cfg, rng);
  models::Head head(models::HeadKind::linear, encoder->feature_dim(), rng, C);
  std::vector<nn::Tensor> params = encoder->parameters();
  for (const auto& p : head.parameters()) params.push_back(p);
  nn::Adam optimizer(params, combo.number("weight_decay", 0.0));
  const double base_lr = combo.number("lr", 1e-3);
  const auto batch_size = static_cast<std::size_t>(combo.integer("batch_size", budget.batch_size));

  auto snapshot = [&] {
    models::ModelCheckpoint ckpt;
    ckpt.arch = {{"encoder", encoder->config()}};
    models::capture(ckpt, *encoder, "encoder.");
    ckpt.seed = seed;
    return ckpt;
  };
  models::ModelCheckpoint best = snapshot();
  double best_f1 = -1.0;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < budget.max_epochs; ++epoch) {
    const double lr = train::lr_at(train::Schedule::step_decay, epoch, base_lr);
    encoder->set_training(true);
    head.set_training(true);
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::vector<std::size_t> b(order.begin() + static_cast<long>(start),
                                       order.begin() + static_cast<long>(std::min(order.size(), start + batch_size)));
      std::vector<int> target;
      for (std::size_t i : b) target.push_back(y[i]);
      nn::Tensor logits = models::classifier_forward(head, encoder->features(models::make_batch(train, b), rng), rng);
      nn::Tensor loss = nn::cross_entropy(logits, target);
      if (!std::isfinite(loss.item())) throw Error("supervised twin diverged");
      optimizer.zero_grad();
      loss.backward();
      optimizer.step(lr);
    }
    head.set_training(false);
    const nn::Tensor feats = train::encode(*encoder, select);
    std::vector<int> pred;
    {
      nn::NoGradGuard guard;
      Rng eval_rng(0);
      const nn::Tensor logits = models::classifier_forward(head, feats, eval_rng);
      const auto v = logits.values();
      for (int i = 0; i < logits.shape()[0]; ++i) {
        const auto row = v.subspan(static_cast<std::size_t>(i) * static_cast<std::size_t>(C), static_cast<std::size_t>(C));
        pred.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
      }
    }
    const double f1 = eval::macro_f1(pred, select_y, C);
    if (f1 > best_f1) {
      best_f1 = f1;
      best = snapshot();
    }
  }
  return best;
}

Json SeparabilityResult::to_json() const { return {{"true_f1", true_f1}, {"random_f1", random_f1}, {"gap", gap}}; }

SeparabilityResult separability_gap(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                    const std::vector<int>& random_labels, int num_classes,
                                    const train::HyperparamCombo& combo, const train::TrainBudget& budget,
                                    std::uint64_t seed) {
  if (labels.size() != random_labels.size() || static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw ShapeError("separability_gap: features and labels disagree");
  }
  const nn::Tensor x = to_tensor(features);
  const std::vector<int> none;
  SeparabilityResult r;
  r.true_f1 = train::fit_head(x, labels, x, none, num_classes, models::HeadKind::linear, combo, budget, seed).best_val_f1;
  r.random_f1 =
      train::fit_head(x, random_labels, x, none, num_classes, models::HeadKind::linear, combo, budget, seed).best_val_f1;
  r.gap = r.true_f1 - r.random_f1;
  return r;
}

SeparabilityResult separability_gap(const models::ModelCheckpoint& encoder, const data::WindowSet& labeled,
                                    const train::HyperparamCombo& combo, const train::TrainBudget& budget,
                                    std::uint64_t seed) {
  const int C = train::class_count(labeled);
  const std::vector<int> y = labels_of(labeled, C);
  Rng rng(mix_seed(seed, 0x7a6e));
  std::vector<int> random_y;
  for (std::size_t i = 0; i < y.size(); ++i) random_y.push_back(rng.uniform_int(0, C - 1));
  auto enc = models::load_encoder(encoder);
  return separability_gap(flatten_rows(train::encode(*enc, labeled)), y, random_y, C, combo, budget, seed);
}

std::vector<double> implicit_dimensionality(const Eigen::MatrixXd& features, int n) {
  if (n < 1) throw ValidationError("implicit_dimensionality: n must be positive");
  const int k = std::min<int>(n, static_cast<int>(features.cols()));
  if (features.rows() <= k) throw ValidationError("implicit_dimensionality: needs more rows than components");
  if (!features.allFinite()) throw ValidationError("implicit_dimensionality: non-finite features");
  const Eigen::MatrixXd xc = features.rowwise() - features.colwise().mean();
  const Eigen::MatrixXd cov = xc.transpose() * xc / static_cast<double>(features.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
  Eigen::VectorXd lambda = solver.eigenvalues().reverse().cwiseMax(0.0);
  const double total = lambda.sum();
  if (!(total > 0.0)) throw ValidationError("implicit_dimensionality: zero-variance features");
  std::vector<double> curve;
  double acc = 0.0;
  for (int i = 0; i < k; ++i) {
    acc += lambda[i];
    curve.push_back(std::clamp(acc / total, 0.0, 1.0));
  }
  return curve;
}

FeatureMatrix pca_features(models::Encoder& encoder, const data::WindowSet& probe) {
  nn::NoGradGuard guard;
  encoder.set_training(false);
  Rng rng(0);
  FeatureMatrix f{"pca", Eigen::MatrixXd()};
  for (const auto& b : batches(probe.size())) {
    const Eigen::MatrixXd part = flatten_rows(encoder.pca_features(models::make_batch(probe, b), rng));
    if (f.values.size() == 0) f.values.resize(static_cast<Eigen::Index>(probe.size()), part.cols());
    f.values.middleRows(static_cast<Eigen::Index>(b.front()), part.rows()) = part;
  }
  f.validate();
  return f;
}

Json curve_to_json(const std::string& name, const std::vector<double>& curve) {
  return {{"name", name}, {"cumulative_variance", curve}};
}

}  // namespace sslhar::analysis
