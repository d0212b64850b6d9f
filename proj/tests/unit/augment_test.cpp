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

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "doctest.h"
#include "sslhar/augment/transforms.hpp"
#include "sslhar/errors.hpp"

using namespace sslhar;
using namespace sslhar::augment;

namespace {

Signal random_window(int L, Rng& rng) {
  Signal w(L, 3);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  return w;
}

std::vector<std::array<double, 3>> sorted_rows(const Signal& w) {
  std::vector<std::array<double, 3>> rows;
  for (Eigen::Index i = 0; i < w.rows(); ++i) rows.push_back({w(i, 0), w(i, 1), w(i, 2)});
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<double> sorted_values(const Signal& w) {
  std::vector<double> v(w.data(), w.data() + w.size());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("every transform preserves shape") {
  Rng rng(1);
  TransformParams p;
  for (int L : {4, 7, 32, 100}) {
    Signal w = random_window(L, rng);
    for (auto k : kAllTransforms) {
      Signal out = apply_transform(k, w, p, rng);
      CHECK(out.rows() == L);
      CHECK(out.allFinite());
    }
  }
  CHECK_THROWS_AS(apply_transform(TransformKind::scramble, random_window(3, rng), p, rng), ShapeError);
  CHECK_THROWS_AS(apply_transform(TransformKind::jitter, Signal(0, 3), p, rng), ShapeError);
}

TEST_CASE("involutions are exact") {
  Rng rng(2);
  TransformParams p;
  Signal w = random_window(50, rng);
  for (auto k : {TransformKind::negation, TransformKind::reversing}) {
    Signal twice = apply_transform(k, apply_transform(k, w, p, rng), p, rng);
    CHECK(twice == w);
  }
  Signal rev = apply_transform(TransformKind::reversing, w, p, rng);
  CHECK(rev.row(0) == w.row(49));
}

TEST_CASE("rotation preserves norms and orientation") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    Eigen::Matrix3d R = random_rotation(rng);
    CHECK(std::abs(R.determinant() - 1.0) < 1e-6);
    CHECK((R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  }
  Signal w = random_window(40, rng);
  Signal r = apply_transform(TransformKind::rotation, w, {}, rng);
  CHECK((r.rowwise().norm() - w.rowwise().norm()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("permutations preserve the multiset of values") {
  Rng rng(4);
  TransformParams p;
  for (int i = 0; i < 100; ++i) {
    Signal w = random_window(rng.uniform_int(4, 60), rng);
    Signal s = apply_transform(TransformKind::scramble, w, p, rng);
    CHECK(sorted_rows(s) == sorted_rows(w));
    CHECK(s != w);
    Signal c = apply_transform(TransformKind::channel_permute, w, p, rng);
    CHECK(sorted_values(c) == sorted_values(w));
    CHECK(c != w);
  }
}

TEST_CASE("scramble moves whole contiguous sections") {
  Rng rng(5);
  Signal w(8, 3);
  for (int i = 0; i < 8; ++i) w.row(i).setConstant(i);
  Signal s = apply_transform(TransformKind::scramble, w, {}, rng);
  for (int sec = 0; sec < 4; ++sec) CHECK(s(2 * sec + 1, 0) == s(2 * sec, 0) + 1);
}

TEST_CASE("scaling and jitter have the configured spread") {
  Rng rng(6);
  TransformParams p;
  Signal ones = Signal::Ones(2000, 3);
  Signal j = apply_transform(TransformKind::jitter, ones, p, rng);
  const double sd = std::sqrt((j.array() - 1.0).square().mean());
  CHECK(sd == doctest::Approx(0.05).epsilon(0.05));

  double sum = 0, sq = 0;
  for (int i = 0; i < 4000; ++i) {
    Signal s = apply_transform(TransformKind::scaling, Signal::Ones(5, 3), p, rng);
    CHECK(s.col(0).maxCoeff() == s.col(0).minCoeff());
    sum += s(0, 1);
    sq += s(0, 1) * s(0, 1);
  }
  const double mean = sum / 4000;
  CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
  CHECK(std::sqrt(sq / 4000 - mean * mean) == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("natural cubic spline interpolates knots and reproduces lines") {
  std::vector<double> xs{0, 1, 3, 4}, ys{1, 2, 0, 5};
  auto at_knots = natural_cubic_spline(xs, ys, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(at_knots[i] == doctest::Approx(ys[i]));
  auto line = natural_cubic_spline(xs, {1, 3, 7, 9}, {0.5, 2.0, 3.5});
  CHECK(line[0] == doctest::Approx(2.0));
  CHECK(line[1] == doctest::Approx(5.0));
  CHECK(line[2] == doctest::Approx(8.0));
}

TEST_CASE("time warp keeps endpoints and the mean of smooth inputs") {
  Rng rng(7);
  Signal w(100, 3);
  for (int i = 0; i < 100; ++i) w.row(i) << 1.0 + 0.1 * std::sin(i / 10.0), 2.0, i / 99.0;
  for (int trial = 0; trial < 20; ++trial) {
    Signal t = apply_transform(TransformKind::time_warp, w, {}, rng);
    CHECK(t.rows() == 100);
    CHECK(t.row(0) == w.row(0));
    CHECK((t.row(99) - w.row(99)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(t.col(0).mean() == doctest::Approx(w.col(0).mean()).epsilon(0.05));
    for (int i = 1; i < 100; ++i) CHECK(t(i, 2) >= t(i - 1, 2));
  }
}

TEST_CASE("contrastive pairs are deterministic and differ from the input") {
  Rng src(8);
  Signal w = random_window(32, src);
  Rng a(42), b(42);
  auto [a1, a2] = sample_contrastive_pair(w, {}, a);
  auto [b1, b2] = sample_contrastive_pair(w, {}, b);
  CHECK(a1 == b1);
  CHECK(a2 == b2);
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    auto [v1, v2] = sample_contrastive_pair(w, {}, rng);
    CHECK(v1.rows() == 32);
    CHECK(v2.rows() == 32);
    CHECK(v1 != w);
    CHECK(v2 != w);
  }
}

TEST_CASE("multitask sampler") {
  Rng src(10);
  Signal w = random_window(40, src);
  TransformParams p;
  Rng rng(11);
  CHECK(compose_transforms(w, AppliedMask{}, p, rng) == w);

  AppliedMask neg_rev{};
  neg_rev[6] = neg_rev[7] = 1;
  Signal expect = (-w).colwise().reverse();
  CHECK(compose_transforms(w, neg_rev, p, rng) == expect);

  double total = 0;
  const int draws = 10000;
  Signal small = random_window(8, src);
  for (int i = 0; i < draws; ++i) {
    MultitaskSample s = sample_multitask_batch(small, p, rng);
    int n = 0;
    for (int a : s.applied) n += a;
    total += n;
    if (n == 0) CHECK(s.transformed == small);
  }
  CHECK(std::abs(total / draws - 4.0) < 0.1);
}
