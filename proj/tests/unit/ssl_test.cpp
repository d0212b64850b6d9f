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

#include <cmath>
#include <functional>

#include "doctest.h"
#include "sslhar/errors.hpp"
#include "sslhar/nn/ops.hpp"
#include "sslhar/nn/optim.hpp"
#include "sslhar/ssl/methods.hpp"
#include "support/gradcheck.hpp"

using namespace sslhar;
using namespace sslhar::ssl;
using sslhar::testing::max_fd_error_slice;
using sslhar::testing::random_tensor;

namespace {

bool all_zero(std::span<const double> v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

PretextConfig small_config(PretextMethod m) {
  PretextConfig cfg;
  cfg.method = m;
  cfg.cpc_k = 8;
  if (m == PretextMethod::cpc) cfg.encoder = {{"kind", "cpc"}, {"gru_units", 32}, {"gru_layers", 2}};
  if (m == PretextMethod::masked_recon) {
    cfg.encoder = {{"kind", "transformer"}, {"embed_dim", 32}, {"heads", 4}, {"layers", 2}, {"ffn_dim", 64}};
  }
  return cfg;
}

}  // namespace

TEST_CASE("uniform-score identities") {
  for (int n : {2, 5, 17}) {
    CHECK(info_nce(Tensor({n, n}, 0.7)).item() == doctest::Approx(std::log(n)).epsilon(1e-12));
  }
  for (int B : {2, 4, 9}) {
    Tensor same({2 * B, 6}, 0.3);
    CHECK(std::abs(nt_xent(same, 0.1).item() - std::log(2 * B - 1)) < 1e-6);
  }
  std::vector<Tensor> logits(8, Tensor({5, 1}, 0.0));
  std::vector<std::vector<double>> targets(8, std::vector<double>{1, 0, 1, 1, 0});
  CHECK(std::abs(multitask_bce(logits, targets).item() - std::log(2.0)) < 1e-6);
}

TEST_CASE("loss limits") {
  std::vector<double> v(16, -50.0);
  for (int i = 0; i < 4; ++i) v[static_cast<std::size_t>(i * 5)] = 50.0;
  CHECK(info_nce(Tensor({4, 4}, v)).item() < 1e-12);

  std::vector<Tensor> logits{Tensor({2, 1}, std::vector<double>{40, -40})};
  CHECK(multitask_bce(logits, {{1, 0}}).item() < 1e-12);
}

TEST_CASE("nt-xent closed form and view symmetry") {
  // Two windows on a line: positives agree, negatives are antipodal.
  Tensor z({4, 2}, std::vector<double>{1, 0, -1, 0, 1, 0, -1, 0});
  CHECK(nt_xent(z, 1.0).item() == doctest::Approx(std::log(1.0 + 2.0 * std::exp(-2.0))).epsilon(1e-9));
  CHECK(std::log(1.0 + 2.0 * std::exp(-2.0)) == doctest::Approx(0.2395).epsilon(1e-3));

  Rng rng(1);
  Tensor r = random_tensor({6, 5}, rng, 1.0, false);
  std::vector<double> swapped(r.values().begin() + 15, r.values().end());
  swapped.insert(swapped.end(), r.values().begin(), r.values().begin() + 15);
  CHECK(nt_xent(r, 0.5).item() == doctest::Approx(nt_xent(Tensor({6, 5}, swapped), 0.5).item()).epsilon(1e-12));
  CHECK_THROWS_AS(nt_xent(Tensor({2, 3}, 1.0), 0.1), ValidationError);
}

TEST_CASE("siamese objectives") {
  Rng rng(2);
  Tensor p = random_tensor({5, 4}, rng, 1.0, false);
  CHECK(std::abs(simsiam_objective(p, p, p, p).item() + 1.0) < 1e-6);
  Tensor a({1, 2}, std::vector<double>{1, 0}), b({1, 2}, std::vector<double>{0, 3});
  CHECK(std::abs(negative_cosine(a, b).item()) < 1e-12);
  CHECK(normalized_mse(p, scale(p, 2.0)).item() < 1e-12);

  Tensor q = random_tensor({5, 4}, rng, 1.0, false);
  double expect = 0.0;
  for (int i = 0; i < 5; ++i) {
    double pq = 0, pp = 0, qq = 0;
    for (int d = 0; d < 4; ++d) {
      const double x = p.at(static_cast<std::size_t>(i * 4 + d)), y = q.at(static_cast<std::size_t>(i * 4 + d));
      pq += x * y;
      pp += x * x;
      qq += y * y;
    }
    expect += (2.0 - 2.0 * pq / std::sqrt(pp * qq)) / 5;
  }
  const double got = normalized_mse(p, q).item();
  CHECK(std::abs(got - expect) < 1e-6);
  CHECK(got >= 0.0);
  CHECK(got <= 4.0);
  const double ss = simsiam_objective(p, q, q, p).item();
  CHECK(ss >= -1.0);
  CHECK(ss <= 1.0);
}

TEST_CASE("stop-gradient branches receive no gradient") {
  Rng rng(3);
  Tensor pa = random_tensor({4, 6}, rng), pb = random_tensor({4, 6}, rng);
  Tensor za = random_tensor({4, 6}, rng), zb = random_tensor({4, 6}, rng);
  simsiam_objective(pa, pb, za, zb).backward();
  CHECK_FALSE(all_zero(pa.grad()));
  CHECK(all_zero(za.grad()));
  CHECK(all_zero(zb.grad()));

  Tensor ta = random_tensor({4, 6}, rng), tb = random_tensor({4, 6}, rng);
  pa.zero_grad();
  byol_objective(pa, pb, ta, tb).backward();
  CHECK_FALSE(all_zero(pa.grad()));
  CHECK(all_zero(ta.grad()));
  CHECK(all_zero(tb.grad()));
}

TEST_CASE("masks") {
  Rng rng(4);
  MaskSpec m = make_mask(100, 0.1, rng);
  CHECK(m.masked_indices.size() == 10);
  CHECK(make_mask(100, 0.7, rng).masked_indices.size() == 70);
  CHECK_THROWS_AS(make_mask(4, 0.1, rng), ValidationError);
  const MaskSpec empty{0.1, {}}, dup{0.1, {1, 1}};
  CHECK_THROWS_AS(empty.validate(10), ValidationError);
  CHECK_THROWS_AS(dup.validate(10), ValidationError);

  Tensor x = random_tensor({2, 10, 3}, rng, 1.0, false);
  std::vector<MaskSpec> specs{MaskSpec{0.2, {0, 7}}, MaskSpec{0.1, {3}}};
  Tensor xm = apply_masks(x, specs);
  CHECK(xm.at(0) == 0.0);
  CHECK(xm.at(7 * 3 + 2) == 0.0);
  CHECK(xm.at(30 + 9) == 0.0);
  CHECK(xm.at(3) == x.at(3));

  // Reconstruction matching only the masked steps gives zero loss.
  const auto ind = mask_indicator(specs, 10);
  std::vector<double> pred(x.size(), 5.0);
  for (std::size_t r = 0; r < ind.size(); ++r)
    if (ind[r])
      for (int c = 0; c < 3; ++c) pred[r * 3 + c] = x.at(r * 3 + c);
  CHECK(nn::masked_mse(Tensor(x.shape(), pred), x, ind).item() == 0.0);
  CHECK(nn::masked_mse(Tensor(x.shape(), 0.0), Tensor(x.shape(), 0.0), ind).item() == 0.0);

  Tensor leaf = random_tensor({2, 10, 3}, rng);
  nn::masked_mse(leaf, x, ind).backward();
  for (std::size_t r = 0; r < ind.size(); ++r)
    for (int c = 0; c < 3; ++c) CHECK((leaf.grad()[r * 3 + c] != 0.0) == static_cast<bool>(ind[r]));
}

TEST_CASE("autoencoder MSE arithmetic") {
  Rng rng(5);
  Tensor x = random_tensor({2, 8, 3}, rng, 1.0, false);
  CHECK(nn::mse(x, x).item() == 0.0);
  CHECK(nn::mse(nn::add_scalar(x, 1.0), x).item() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("every method yields a finite loss and matches finite differences") {
  Rng data_rng(6);
  Tensor batch = random_tensor({4, 32, 3}, data_rng, 1.0, false);
  for (auto m : kAllMethods) {
    CAPTURE(to_string(m));
    Rng init(7);
    auto model = make_pretext_model(small_config(m), init);
    std::function<Tensor()> loss = [&] {
      Rng r(11);
      return model->loss(batch, r);
    };
    if (m == PretextMethod::simsiam) {
      // Finite differences see through the stop-gradient, so hold the projections fixed.
      auto& siam = dynamic_cast<SimsiamModel&>(*model);
      Rng r(11);
      SiameseOutputs fixed = siam.outputs(batch, r);
      Tensor za = fixed.z_a.detach(), zb = fixed.z_b.detach();
      loss = [&siam, &batch, za, zb] {
        Rng r2(11);
        SiameseOutputs o = siam.outputs(batch, r2);
        return simsiam_objective(o.p_a, o.p_b, za, zb);
      };
    }
    const double l = loss().item();
    CHECK(std::isfinite(l));
    if (m != PretextMethod::simsiam) CHECK(l > 0.0);
    Rng pick(13);
    CHECK(max_fd_error_slice(model->trainable_parameters(), loss, 10, pick) < 1e-4);
  }
}

TEST_CASE("multitask loss at a random initialisation is near ln 2") {
  Rng rng(8);
  auto model = make_pretext_model(small_config(PretextMethod::multitask), rng);
  Tensor batch = random_tensor({8, 40, 3}, rng, 1.0, false);
  const double l = model->loss(batch, rng).item();
  CHECK(l > 0.3);
  CHECK(l < 2.0);
}

TEST_CASE("cpc validates k and anchors") {
  Rng rng(9);
  auto cfg = small_config(PretextMethod::cpc);
  cfg.cpc_k = 32;
  auto model = make_pretext_model(cfg, rng);
  CHECK_THROWS_AS(model->loss(random_tensor({2, 32, 3}, rng, 1.0, false), rng), ValidationError);
  for (int k : {32, 48, 64}) {
    cfg.cpc_k = k;
    auto m = make_pretext_model(cfg, rng);
    m->set_training(false);
    CHECK(std::isfinite(m->loss(random_tensor({2, 100, 3}, rng, 1.0, false), rng).item()));
  }
  auto owner = make_pretext_model(small_config(PretextMethod::cpc), rng);
  auto& cpc = dynamic_cast<CpcModel&>(*owner);
  Tensor x = random_tensor({2, 20, 3}, rng, 1.0, false);
  CHECK_THROWS_AS(cpc.loss(x, std::vector<int>{0, 12}, rng), ValidationError);
  CHECK(std::isfinite(cpc.loss(x, std::vector<int>{0, 11}, rng).item()));
}

TEST_CASE("masked reconstruction gradients stay at masked positions") {
  Rng rng(10);
  auto model = make_pretext_model(small_config(PretextMethod::masked_recon), rng);
  auto& mr = dynamic_cast<MaskedReconModel&>(*model);
  Tensor x = random_tensor({2, 16, 3}, rng, 1.0, false);
  std::vector<MaskSpec> specs{make_mask(16, 0.25, rng), make_mask(16, 0.25, rng)};
  Tensor recon = mr.reconstruct(apply_masks(x, specs), rng);
  recon.set_requires_grad(true);
  const auto ind = mask_indicator(specs, 16);
  nn::masked_mse(recon, x, ind).backward();
  for (std::size_t r = 0; r < ind.size(); ++r) {
    if (!ind[r])
      for (int c = 0; c < 3; ++c) CHECK(recon.grad()[r * 3 + c] == 0.0);
  }
  CHECK_THROWS_AS(mr.loss(x, std::vector<MaskSpec>{MaskSpec{}, MaskSpec{}}, rng), ValidationError);
}

TEST_CASE("byol target changes only through the moving average") {
  Rng rng(11);
  auto model = make_pretext_model(small_config(PretextMethod::byol), rng);
  auto& byol = dynamic_cast<ByolModel&>(*model);
  Tensor batch = random_tensor({4, 32, 3}, rng, 1.0, false);
  byol.loss(batch, rng).backward();
  for (const auto& p : byol.target_encoder().parameters()) CHECK_FALSE(p.has_grad());
  for (const auto& p : byol.target_projector().parameters()) CHECK_FALSE(p.has_grad());

  std::size_t trainable = byol.trainable_parameters().size();
  std::size_t targets = byol.target_encoder().parameters().size() + byol.target_projector().parameters().size();
  CHECK(trainable + targets == byol.parameters().size());

  nn::Linear online(2, 2, rng), target(2, 2, rng);
  for (double& v : online.weight.values()) v = 0.0;
  for (double& v : target.weight.values()) v = 1.0;
  ema_update(target, online, 0.99);
  CHECK(target.weight.at(0) == doctest::Approx(0.99));
  nn::Linear wrong(3, 2, rng);
  CHECK_THROWS_AS(ema_update(target, wrong, 0.99), IntegrityError);

  ByolState state;
  state.ema_decay = 0.99;
  state.online.weights["w"] = {{1}, {0.0}};
  state.target.weights["w"] = {{1}, {1.0}};
  ema_update(state);
  CHECK(state.target.weights["w"].values[0] == doctest::Approx(0.99));
  state.online.weights["v"] = {{1}, {0.0}};
  CHECK_THROWS_AS(ema_update(state), IntegrityError);
}

TEST_CASE("simclr rejects single-window batches") {
  Rng rng(12);
  auto model = make_pretext_model(small_config(PretextMethod::simclr), rng);
  CHECK_THROWS_AS(model->loss(random_tensor({1, 32, 3}, rng, 1.0, false), rng), ValidationError);
}

TEST_CASE("autoencoder overfits a tiny batch") {
  Rng rng(13);
  PretextConfig cfg = small_config(PretextMethod::autoencoder);
  cfg.encoder = {{"kind", "autoencoder"}, {"dropout", 0.0}, {"kernel", 3}};
  auto model = make_pretext_model(cfg, rng);
  Tensor batch = random_tensor({4, 32, 3}, rng, 1.0, false);
  nn::Adam opt(model->trainable_parameters());
  double first = 0, last = 0;
  for (int step = 0; step < 50; ++step) {
    opt.zero_grad();
    Tensor l = model->loss(batch, rng);
    if (step == 0) first = l.item();
    last = l.item();
    l.backward();
    opt.step(1e-3);
  }
  CHECK(last < first);
}

TEST_CASE("pretext checkpoints restore every array") {
  Rng rng(14);
  auto a = make_pretext_model(small_config(PretextMethod::simsiam), rng);
  auto b = make_pretext_model(small_config(PretextMethod::simsiam), rng);
  b->load(a->checkpoint());
  auto sa = a->named_state(), sb = b->named_state();
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(std::equal(sa[i].second.values().begin(), sa[i].second.values().end(), sb[i].second.values().begin()));
  auto enc = models::load_encoder(a->checkpoint());
  CHECK(enc->kind() == "conv");
  CHECK(PretextConfig::from_json(a->config().to_json()).method == PretextMethod::simsiam);
}
