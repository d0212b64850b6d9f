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

// Acceptance runner: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. The exit code is nonzero only if the runner
// itself breaks; criterion failures are reported, not raised.

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sslhar/analysis/features.hpp"
#include "sslhar/augment/transforms.hpp"
#include "sslhar/data/pipeline.hpp"
#include "sslhar/data/synthetic.hpp"
#include "sslhar/eval/metrics.hpp"
#include "sslhar/eval/protocols.hpp"
#include "sslhar/nn/ops.hpp"
#include "sslhar/results/experiment.hpp"
#include "sslhar/ssl/losses.hpp"
#include "sslhar/ssl/methods.hpp"
#include "sslhar/train/engine.hpp"
#include "support/gradcheck.hpp"
#include "support/temp_dir.hpp"

using namespace sslhar;
using Clock = std::chrono::steady_clock;
using sslhar::testing::max_fd_error_slice;
using sslhar::testing::random_tensor;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<void(Outcome&)> body;
};

Eigen::MatrixXd gaussian(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

ssl::PretextConfig small_config(ssl::PretextMethod m) {
  ssl::PretextConfig cfg;
  cfg.method = m;
  cfg.cpc_k = 8;
  if (m == ssl::PretextMethod::cpc) cfg.encoder = {{"kind", "cpc"}, {"gru_units", 32}, {"gru_layers", 2}};
  if (m == ssl::PretextMethod::masked_recon) {
    cfg.encoder = {{"kind", "transformer"}, {"embed_dim", 32}, {"heads", 4}, {"layers", 2}, {"ffn_dim", 64}};
  }
  return cfg;
}

void imbalance_totals(Outcome& o) {
  const double rhos[] = {0.001, 0.01, 0.1};
  const double quoted[] = {27000, 33000, 51000};
  for (int i = 0; i < 3; ++i) {
    eval::ImbalanceSpec spec;
    spec.rho = rhos[i];
    const auto counts = eval::imbalance_counts(spec);
    const int total = std::accumulate(counts.begin(), counts.end(), 0);
    const double rel = std::abs(total - quoted[i]) / quoted[i];
    o.detail << " rho=" << rhos[i] << ":" << total << " (" << 100 * rel << "%)";
    o.require(rel <= 0.01, "rho=" + std::to_string(rhos[i]) + " total off by more than 1%");
    if (rhos[i] == 0.01) {
      o.detail << " rarest=" << counts.back();
      o.require(counts.back() == 200, "rarest class at rho=0.01");
    }
  }
}

void user_sweep(Outcome& o) {
  std::vector<std::string> users;
  for (int i = 0; i < 135; ++i) users.push_back("u" + std::to_string(i));
  const std::vector<std::size_t> want{1, 6, 13, 33, 67, 135};
  const double pcts[] = {1, 5, 10, 25, 50, 100};
  for (int i = 0; i < 6; ++i) {
    const auto n = eval::subsample_users(users, pcts[i], 1).size();
    o.detail << " " << pcts[i] << "%:" << n;
    o.require(n == want[static_cast<std::size_t>(i)], "count at " + std::to_string(pcts[i]) + "%");
  }
}

void loss_identities(Outcome& o) {
  double worst = 0.0;
  auto track = [&](double got, double want, const std::string& what) {
    const double e = std::abs(got - want);
    worst = std::max(worst, e);
    o.require(e <= 1e-6, what);
  };
  Rng rng(3);
  for (int n : {2, 8, 64}) {
    track(ssl::info_nce(nn::Tensor({n, n}, rng.normal())).item(), std::log(n), "InfoNCE uniform");
  }
  for (int B : {2, 16, 64}) {
    nn::Tensor z({2 * B, 8}, rng.uniform(0.1, 2.0));
    track(ssl::nt_xent(z, 0.1).item(), std::log(2 * B - 1), "NT-Xent identical embeddings");
  }
  std::vector<nn::Tensor> logits(8, nn::Tensor({6, 1}, 0.0));
  std::vector<std::vector<double>> targets(8, std::vector<double>{1, 0, 0, 1, 1, 0});
  track(ssl::multitask_bce(logits, targets).item(), std::log(2.0), "multitask BCE at zero logits");
  for (int t = 0; t < 5; ++t) {
    nn::Tensor p = random_tensor({8, 16}, rng, 1.0, false);
    track(ssl::simsiam_objective(p, p, p, p).item(), -1.0, "SimSiam at p = z");
    nn::Tensor q = random_tensor({8, 16}, rng, 1.0, false);
    double expect = 0.0;
    for (int i = 0; i < 8; ++i) {
      double pq = 0, pp = 0, qq = 0;
      for (int d = 0; d < 16; ++d) {
        const double x = p.at(static_cast<std::size_t>(i * 16 + d)), y = q.at(static_cast<std::size_t>(i * 16 + d));
        pq += x * y;
        pp += x * x;
        qq += y * y;
      }
      expect += (2.0 - 2.0 * pq / std::sqrt(pp * qq)) / 8;
    }
    track(ssl::normalized_mse(p, q).item(), expect, "BYOL 2 - 2cos");
  }
  o.detail << " max abs error " << worst;
}

void gradient_localization(Outcome& o) {
  Rng rng(10);
  {
    auto model = ssl::make_pretext_model(small_config(ssl::PretextMethod::masked_recon), rng);
    auto& mr = dynamic_cast<ssl::MaskedReconModel&>(*model);
    nn::Tensor x = random_tensor({4, 32, 3}, rng, 1.0, false);
    std::vector<ssl::MaskSpec> specs;
    for (int b = 0; b < 4; ++b) specs.push_back(ssl::make_mask(32, 0.1, rng));
    nn::Tensor recon = mr.reconstruct(ssl::apply_masks(x, specs), rng);
    recon.set_requires_grad(true);
    const auto ind = ssl::mask_indicator(specs, 32);
    nn::masked_mse(recon, x, ind).backward();
    bool localized = true;
    for (std::size_t r = 0; r < ind.size(); ++r) {
      for (int c = 0; c < 3; ++c) {
        const double g = recon.grad()[r * 3 + static_cast<std::size_t>(c)];
        if (ind[r] ? false : g != 0.0) localized = false;
      }
    }
    o.require(localized, "masked reconstruction gradient outside masked steps");
  }
  {
    nn::Tensor pa = random_tensor({4, 6}, rng), pb = random_tensor({4, 6}, rng);
    nn::Tensor za = random_tensor({4, 6}, rng), zb = random_tensor({4, 6}, rng);
    ssl::simsiam_objective(pa, pb, za, zb).backward();
    o.require(!all_zero(pa.grad()) && all_zero(za.grad()) && all_zero(zb.grad()), "SimSiam stop-gradient");
  }
  {
    auto model = ssl::make_pretext_model(small_config(ssl::PretextMethod::byol), rng);
    auto& byol = dynamic_cast<ssl::ByolModel&>(*model);
    byol.loss(random_tensor({4, 32, 3}, rng, 1.0, false), rng).backward();
    bool clean = true;
    for (const auto& p : byol.target_encoder().parameters()) clean = clean && !p.has_grad();
    for (const auto& p : byol.target_projector().parameters()) clean = clean && !p.has_grad();
    o.require(clean, "BYOL target received gradient");
  }
  Rng data_rng(6);
  nn::Tensor batch = random_tensor({4, 32, 3}, data_rng, 1.0, false);
  double worst = 0.0;
  for (auto m : ssl::kAllMethods) {
    Rng init(7);
    auto model = ssl::make_pretext_model(small_config(m), init);
    std::function<nn::Tensor()> loss = [&] {
      Rng r(11);
      return model->loss(batch, r);
    };
    if (m == ssl::PretextMethod::simsiam) {
      auto& siam = dynamic_cast<ssl::SimsiamModel&>(*model);
      Rng r(11);
      const ssl::SiameseOutputs fixed = siam.outputs(batch, r);
      nn::Tensor za = fixed.z_a.detach(), zb = fixed.z_b.detach();
      loss = [&siam, &batch, za, zb] {
        Rng r2(11);
        const ssl::SiameseOutputs out = siam.outputs(batch, r2);
        return ssl::simsiam_objective(out.p_a, out.p_b, za, zb);
      };
    }
    Rng pick(13);
    const double err = max_fd_error_slice(model->trainable_parameters(), loss, 20, pick);
    worst = std::max(worst, err);
    o.require(err <= 1e-4, "finite differences for " + ssl::to_string(m));
  }
  o.detail << " worst FD relative error " << worst;
}

void cka_suite(Outcome& o) {
  Rng rng(1);
  double inv = 0.0, sym = 0.0, self = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Eigen::MatrixXd x = gaussian(200, 16, rng);
    const Eigen::MatrixXd y = gaussian(200, 16, rng) + 0.5 * x;
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(16, 16, rng)).householderQ();
    const double base = analysis::linear_cka(x, y);
    self = std::max(self, std::abs(analysis::linear_cka(x, x) - 1.0));
    inv = std::max(inv, std::abs(analysis::linear_cka(rng.uniform(0.1, 10.0) * x, y) - base));
    inv = std::max(inv, std::abs(analysis::linear_cka(x * q, y) - base));
    sym = std::max(sym, std::abs(analysis::linear_cka(y, x) - base));
  }
  o.detail << " self " << self << " invariance " << inv << " symmetry " << sym;
  o.require(self <= 1e-9, "self-similarity");
  o.require(inv <= 1e-9, "scaling or orthogonal invariance");
  o.require(sym <= 1e-12, "symmetry");
}

void pca_dimensionality(Outcome& o) {
  Rng rng(2);
  bool monotone = true;
  for (int t = 0; t < 20; ++t) {
    const auto c = analysis::implicit_dimensionality(gaussian(100, 24, rng) * gaussian(24, 24, rng));
    for (std::size_t i = 1; i < c.size(); ++i) monotone = monotone && c[i] >= c[i - 1];
  }
  o.require(monotone, "curve decreases");
  const Eigen::MatrixXd rank1 = gaussian(500, 1, rng) * gaussian(1, 30, rng);
  const double first = analysis::implicit_dimensionality(rank1).front();
  o.require(std::abs(first - 1.0) <= 1e-9, "rank-1 first component");
  Rng iso_rng(0);
  const auto iso = analysis::implicit_dimensionality(gaussian(10000, 20, iso_rng));
  double dev = 0.0;
  for (std::size_t i = 0; i < iso.size(); ++i) dev = std::max(dev, std::abs(iso[i] - (i + 1) / 20.0));
  o.detail << " rank-1 first " << first << " isotropic max deviation " << dev;
  o.require(iso.size() == 20 && dev <= 0.02, "isotropic curve off i/20");
}

double oracle_macro_f1(const std::vector<int>& pred, const std::vector<int>& label, int C) {
  Eigen::MatrixXd cm = Eigen::MatrixXd::Zero(C, C);
  for (std::size_t i = 0; i < pred.size(); ++i) cm(label[i], pred[i]) += 1;
  double total = 0.0;
  for (int c = 0; c < C; ++c) {
    const double tp = cm(c, c), fp = cm.col(c).sum() - tp, fn = cm.row(c).sum() - tp;
    if (tp > 0) total += 2 * tp / (2 * tp + fp + fn);
  }
  return total / C;
}

void macro_f1_oracle(Outcome& o) {
  Rng rng(11);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int C = rng.uniform_int(2, 10);
    const int n = rng.uniform_int(1, 200);
    std::vector<int> pred, label;
    for (int i = 0; i < n; ++i) {
      label.push_back(rng.uniform_int(0, C - 1));
      pred.push_back(rng.bernoulli(0.5) ? label.back() : rng.uniform_int(0, C - 1));
    }
    worst = std::max(worst, std::abs(eval::macro_f1(pred, label, C) - oracle_macro_f1(pred, label, C)));
  }
  std::vector<int> label(100, 0);
  std::fill(label.begin() + 75, label.end(), 1);
  const double majority = eval::macro_f1(std::vector<int>(100, 0), label, 2);
  o.detail << " max oracle gap " << worst << " majority case " << majority;
  o.require(worst <= 1e-9, "oracle disagreement");
  o.require(std::abs(majority - 0.4286) <= 1e-4, "always-majority case");
}

struct DeskMethod {
  ssl::PretextMethod method;
  int epochs;
  double lr;
};

void desk_learning_signal(Outcome& o) {
  auto all = data::make_windows(data::make_synthetic(data::SyntheticSpec{}), 100, 0.0);
  all = data::normalize(all, data::compute_norm_stats(all));
  const auto train = all.filter_users({"u1", "u2", "u3", "u4"});
  const auto test = all.filter_users({"u5", "u6"});
  const std::vector<DeskMethod> methods{{ssl::PretextMethod::multitask, 16, 1e-3},
                                        {ssl::PretextMethod::masked_recon, 8, 3e-3},
                                        {ssl::PretextMethod::cpc, 8, 1e-3},
                                        {ssl::PretextMethod::autoencoder, 8, 1e-3},
                                        {ssl::PretextMethod::simclr, 8, 0.05},
                                        {ssl::PretextMethod::simsiam, 8, 0.05},
                                        {ssl::PretextMethod::byol, 8, 0.05}};
  const train::HyperparamCombo probe_combo{{{"class_lr", 1e-2}}, 0};
  const train::TrainBudget probe_budget{30, 5, 64};
  constexpr int kSeeds = 5;
  for (const auto& dm : methods) {
    ssl::PretextConfig cfg;
    cfg.method = dm.method;
    cfg.cpc_k = 12;
    switch (dm.method) {
      case ssl::PretextMethod::cpc:
        cfg.encoder = {{"kind", "cpc"}, {"filters", {16, 32, 32}}, {"gru_units", 32}, {"gru_layers", 1}};
        break;
      case ssl::PretextMethod::masked_recon:
        cfg.encoder = {{"kind", "transformer"}, {"embed_dim", 32}, {"heads", 4}, {"layers", 2}, {"ffn_dim", 64}};
        break;
      case ssl::PretextMethod::autoencoder:
        cfg.encoder = {{"kind", "autoencoder"}, {"filters", {16, 32, 32}}};
        break;
      default:
        cfg.encoder = {{"kind", "conv"}, {"filters", {16, 32, 32}}, {"kernels", {24, 16, 8}}};
    }
    const train::HyperparamCombo combo{{{"lr", dm.lr}, {"warmup", 100}, {"batch_size", 64}}, 0};
    double random_sum = 0.0, pretrained_sum = 0.0;
    for (int s = 0; s < kSeeds; ++s) {
      auto probe = [&](const models::ModelCheckpoint& ckpt) {
        const auto fit = train::finetune(ckpt, train, {}, models::HeadKind::linear, probe_combo, probe_budget,
                                         static_cast<std::uint64_t>(7 + s));
        return eval::macro_f1(fit.classifier->predict(test), test.labels(), 3);
      };
      const auto seed = static_cast<std::uint64_t>(100 + s);
      random_sum += probe(train::initial_checkpoint(cfg, seed));
      const auto r = train::pretrain(cfg, all, test, combo, {dm.epochs, dm.epochs - 1, 64}, seed);
      pretrained_sum += probe(r.checkpoint);
    }
    const double gap = 100.0 * (pretrained_sum - random_sum) / kSeeds;
    std::printf("      %-13s random %.4f pretrained %.4f gap %+.1f\n", ssl::to_string(dm.method).c_str(),
                random_sum / kSeeds, pretrained_sum / kSeeds, gap);
    std::fflush(stdout);
    o.detail << " " << ssl::to_string(dm.method) << " " << (gap >= 0 ? "+" : "") << std::round(gap * 10) / 10;
    o.require(gap >= 10.0, ssl::to_string(dm.method) + " below +10");
  }
}

void protocol_bookkeeping(Outcome& o) {
  test_support::TempDir dir;
  data::SyntheticSpec target;
  data::SyntheticSpec source;
  source.seed = 11;
  source.dataset_id = "synthetic_source";
  results::ExperimentConfig cfg;
  cfg.methods = {"autoencoder"};
  cfg.source.synthetic = source;
  cfg.target.synthetic = target;
  cfg.encoders = {{"autoencoder", {{"kind", "autoencoder"}, {"filters", {4, 4}}}}};
  cfg.pretrain_budget = {2, 1, 256};
  cfg.finetune_budget = {2, 1, 256};
  cfg.pretrain_combos = 2;
  cfg.finetune_combos = 3;
  cfg.folds = 5;
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.seed = 0;
  cfg.out_dir = dir.path();
  const auto path = dir.path() / "runs.jsonl";
  const std::size_t combos = cfg.finetune_combos;
  const std::size_t expected = combos * 5 + 5 * 5;

  results::ExperimentResult first;
  {
    results::ResultStore store(path);
    first = results::run(cfg, store);
  }
  const auto stored = results::read_store(path).records;
  std::set<std::string> ids;
  for (const auto& r : stored) ids.insert(r.run_id);
  o.detail << " expected " << expected << " records; trained " << first.trained << ", stored " << stored.size()
           << " (" << ids.size() << " ids)";
  o.require(first.trained == expected && stored.size() == expected && ids.size() == expected, "record count");
  o.require(first.records.size() == expected, "summary record count");

  results::ResultStore again(path);
  const auto second = results::run(cfg, again);
  o.detail << "; re-run trained " << second.trained << ", pretrained " << second.pretrained;
  o.require(second.trained == 0 && second.pretrained == 0, "re-run trained");
  o.require(results::read_store(path).records.size() == expected, "re-run wrote records");
  o.require(second.summaries.at(0).final_f1.mean == first.summaries.at(0).final_f1.mean, "re-run summary");
}

std::vector<std::array<double, 3>> sorted_rows(const augment::Signal& w) {
  std::vector<std::array<double, 3>> rows;
  for (Eigen::Index i = 0; i < w.rows(); ++i) rows.push_back({w(i, 0), w(i, 1), w(i, 2)});
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<double> sorted_values(const augment::Signal& w) {
  std::vector<double> v(w.data(), w.data() + w.size());
  std::sort(v.begin(), v.end());
  return v;
}

void augmentation_invariants(Outcome& o) {
  Rng rng(4);
  const augment::TransformParams params;
  bool involution = true, multiset = true;
  double norm_err = 0.0;
  for (int t = 0; t < 1000; ++t) {
    augment::Signal w(rng.uniform_int(4, 200), 3);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
    for (auto k : {augment::TransformKind::negation, augment::TransformKind::reversing}) {
      involution = involution && augment::apply_transform(k, augment::apply_transform(k, w, params, rng), params, rng) == w;
    }
    const auto r = augment::apply_transform(augment::TransformKind::rotation, w, params, rng);
    norm_err = std::max(norm_err, (r.rowwise().norm() - w.rowwise().norm()).cwiseAbs().maxCoeff());
    const auto s = augment::apply_transform(augment::TransformKind::scramble, w, params, rng);
    const auto c = augment::apply_transform(augment::TransformKind::channel_permute, w, params, rng);
    multiset = multiset && sorted_rows(s) == sorted_rows(w) && sorted_values(c) == sorted_values(w);
  }
  o.detail << " rotation norm error " << norm_err;
  o.require(involution, "involution");
  o.require(norm_err <= 1e-6, "rotation norm");
  o.require(multiset, "scramble or permute multiset");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "imbalance generator totals", 1.0, imbalance_totals},
      {2, "user sweep arithmetic", 1.0, user_sweep},
      {3, "loss identities", 10.0, loss_identities},
      {4, "gradient localization and finite differences", 120.0, gradient_localization},
      {5, "CKA suite", 5.0, cka_suite},
      {6, "PCA implicit dimensionality", 10.0, pca_dimensionality},
      {7, "macro F1 oracle", 10.0, macro_f1_oracle},
      {8, "desk-scale learning signal", 900.0, desk_learning_signal},
      {9, "protocol bookkeeping", 300.0, protocol_bookkeeping},
      {10, "augmentation invariants", 5.0, augmentation_invariants},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int passed = 0, run = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++run;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (secs > c.limit_s) o.require(false, "runtime over " + std::to_string(static_cast<int>(c.limit_s)) + " s");
    if (o.pass) ++passed;
    std::printf("%s %2d %s (%.2f s, limit %.0f s):%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, c.limit_s,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("SUMMARY %d/%d criteria passed\n", passed, run);
  return 0;
}
