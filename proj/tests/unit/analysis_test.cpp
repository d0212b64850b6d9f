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

#include <doctest.h>

#include <cmath>

#include "sslhar/analysis/features.hpp"
#include "sslhar/data/pipeline.hpp"
#include "sslhar/data/synthetic.hpp"
#include "sslhar/errors.hpp"
#include "sslhar/random.hpp"

using namespace sslhar;
using namespace sslhar::analysis;

namespace {

Eigen::MatrixXd gaussian(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

// Kernel route: HSIC on centred Gram matrices.
double gram_cka(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Eigen::MatrixXd k = h * (x * x.transpose()) * h;
  const Eigen::MatrixXd l = h * (y * y.transpose()) * h;
  return (k.cwiseProduct(l)).sum() / std::sqrt(k.cwiseProduct(k).sum() * l.cwiseProduct(l).sum());
}

data::WindowSet windows(int n, int length) {
  data::SyntheticSpec spec;
  spec.total_windows = n;
  spec.window_length = length;
  auto ws = data::make_windows(data::make_synthetic(spec), length, 0.0);
  return data::normalize(ws, data::compute_norm_stats(ws));
}

}  // namespace

TEST_CASE("linear CKA invariances") {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd x = gaussian(200, 16, rng);
    const Eigen::MatrixXd y = gaussian(200, 16, rng) + 0.5 * x;
    CHECK(linear_cka(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(linear_cka(x, 3.7 * y) - linear_cka(x, y)) < 1e-9);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(16, 16, rng)).householderQ();
    CHECK(std::abs(linear_cka(x * q, y) - linear_cka(x, y)) < 1e-9);
    CHECK(std::abs(linear_cka(x, x * q) - 1.0) < 1e-9);
    CHECK(std::abs(linear_cka(x, y) - linear_cka(y, x)) < 1e-12);
    CHECK(std::abs(linear_cka(x, y) - gram_cka(x, y)) < 1e-9);
    const double v = linear_cka(x, y);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  const Eigen::MatrixXd x = gaussian(20, 3, rng);
  CHECK_THROWS_AS(linear_cka(x, Eigen::MatrixXd::Constant(20, 3, 2.0)), ValidationError);
  CHECK_THROWS_AS(linear_cka(x, gaussian(19, 3, rng)), ValidationError);
}

TEST_CASE("implicit dimensionality") {
  Rng rng(2);
  const Eigen::VectorXd u = gaussian(500, 1, rng);
  const Eigen::MatrixXd dir = gaussian(1, 30, rng);
  const auto rank1 = implicit_dimensionality(u * dir);
  CHECK(rank1.front() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rank1.size() == 20);

  Rng iso_rng(0);
  const auto iso = implicit_dimensionality(gaussian(10000, 20, iso_rng));
  REQUIRE(iso.size() == 20);
  for (int i = 0; i < 20; ++i) CHECK(std::abs(iso[static_cast<std::size_t>(i)] - (i + 1) / 20.0) <= 0.02);

  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd f = gaussian(60, 12, rng) * gaussian(12, 12, rng);
    const auto c = implicit_dimensionality(f, 20);
    CHECK(c.size() == 12);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] >= c[i - 1]);
    CHECK(c.back() <= 1.0);
    CHECK(c.back() == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(implicit_dimensionality(gaussian(10, 20, rng), 20), ValidationError);
  CHECK_THROWS_AS(implicit_dimensionality(Eigen::MatrixXd::Ones(30, 4), 2), ValidationError);
}

TEST_CASE("separability gap oracles") {
  Rng rng(3);
  train::HyperparamCombo combo{{{"class_lr", 0.05}}, 0};
  const train::TrainBudget budget{40, 5, 64};
  const int n = 600;
  Eigen::MatrixXd f(n, 2);
  std::vector<int> y, noise;
  for (int i = 0; i < n; ++i) {
    y.push_back(i % 2);
    f(i, 0) = (y.back() ? 4.0 : -4.0) + rng.normal();
    f(i, 1) = rng.normal();
    noise.push_back(rng.uniform_int(0, 1));
  }
  const auto same = separability_gap(f, y, y, 2, combo, budget, 1);
  CHECK(same.gap == 0.0);
  const auto sep = separability_gap(f, y, noise, 2, combo, budget, 1);
  CHECK(sep.true_f1 > 0.98);
  CHECK(sep.random_f1 == doctest::Approx(0.5).epsilon(0.1 / 0.5));
  CHECK(sep.gap == doctest::Approx(0.5).epsilon(0.1 / 0.5));
  CHECK(sep.gap >= -1.0);
  CHECK(sep.gap <= 1.0);

  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(n, 2, 0.3);
  const auto chance = separability_gap(flat, y, noise, 2, combo, budget, 1);
  CHECK(std::abs(chance.gap) <= 0.05);
  CHECK(sep.to_json().at("gap").get<double>() == sep.gap);
}

TEST_CASE("layerwise similarity of encoders") {
  const auto probe = probe_windows(windows(120, 32), 100, 4);
  CHECK(probe.size() == 100);
  Rng rng(5);
  auto cpc = models::make_encoder({{"kind", "cpc"}, {"filters", {4, 4, 4}}, {"gru_units", 4}, {"gru_layers", 1}}, rng);
  const auto self = layerwise_similarity(*cpc, *cpc, probe);
  REQUIRE(self.values.rows() == 4);
  REQUIRE(self.values.cols() == 4);
  for (int i = 0; i < 4; ++i) CHECK(self.values(i, i) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(self.layer_names_a == self.layer_names_b);

  auto conv = models::make_encoder({{"kind", "conv"}, {"filters", {4, 6}}, {"kernels", {5, 3}}}, rng);
  const auto cross = layerwise_similarity(*cpc, *conv, probe);
  CHECK(cross.values.rows() == 4);
  CHECK(cross.values.cols() == 2);
  CHECK(cross.values.minCoeff() >= 0.0);
  CHECK(cross.values.maxCoeff() <= 1.0);

  const auto back = SimilarityMatrix::from_json(cross.to_json());
  CHECK(back.values.isApprox(cross.values));
  const auto avg = mean_similarity({cross, back});
  CHECK(avg.values.isApprox(cross.values));
  CHECK_THROWS_AS(mean_similarity({self, cross}), ShapeError);
}

TEST_CASE("supervised twin and frozen-encoder analyses") {
  const auto ws = windows(240, 32);
  const Json cfg{{"kind", "conv"}, {"filters", {6, 6}}, {"kernels", {5, 3}}};
  const auto ckpt = supervised_twin(cfg, ws, {}, train::HyperparamCombo{{{"lr", 3e-3}}, 0}, {4, 2, 32}, 1);
  auto twin = models::load_encoder(ckpt);
  Rng rng(6);
  auto fresh = models::make_encoder(cfg, rng);
  const auto sim = layerwise_similarity(*twin, *fresh, probe_windows(ws, 100, 1));
  CHECK(sim.values.rows() == 2);

  const auto f = pca_features(*twin, ws);
  CHECK(f.values.rows() == static_cast<Eigen::Index>(ws.size()));
  CHECK(f.values.cols() == twin->feature_dim());
  const auto curve = implicit_dimensionality(f.values, 20);
  CHECK(curve.size() == 6);
  CHECK(curve_to_json("conv", curve).at("cumulative_variance").size() == 6);

  const auto gap = separability_gap(ckpt, ws, train::HyperparamCombo{{{"class_lr", 1e-2}}, 0}, {20, 5, 64}, 2);
  CHECK(gap.gap > 0.0);
  CHECK(gap.gap <= 1.0);
}

TEST_CASE("feature matrix validation") {
  FeatureMatrix f{"x", Eigen::MatrixXd::Zero(1, 3)};
  CHECK_THROWS_AS(f.validate(), ValidationError);
  f.values = Eigen::MatrixXd::Zero(3, 3);
  f.values(0, 0) = std::nan("");
  CHECK_THROWS_AS(f.validate(), ValidationError);
}
