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

#include "sslhar/augment/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Geometry>

#include "sslhar/errors.hpp"

namespace sslhar::augment {

namespace {

constexpr double kMinSpeed = 0.1;

/// Uniform over the n! - 1 non-identity permutations of 0..n-1.
std::vector<int> non_identity_permutation(int n, Rng& rng) {
  std::vector<int> p;
  do {
    p = rng.permutation(n);
  } while (std::is_sorted(p.begin(), p.end()));
  return p;
}

Signal scramble(const Signal& w, int sections, Rng& rng) {
  const int L = static_cast<int>(w.rows());
  std::vector<int> start(static_cast<std::size_t>(sections) + 1, 0);
  for (int s = 0; s < sections; ++s) start[s + 1] = start[s] + L / sections + (s < L % sections ? 1 : 0);
  const std::vector<int> order = non_identity_permutation(sections, rng);
  Signal out(L, 3);
  int row = 0;
  for (int s : order) {
    const int len = start[s + 1] - start[s];
    out.middleRows(row, len) = w.middleRows(start[s], len);
    row += len;
  }
  return out;
}

Signal time_warp(const Signal& w, const TransformParams& p, Rng& rng) {
  const int L = static_cast<int>(w.rows());
  if (L < 2) return w;
  std::vector<double> knots_x, knots_y;
  for (int k = 0; k < p.warp_knots; ++k) {
    knots_x.push_back(p.warp_knots == 1 ? 0.0 : (L - 1) * static_cast<double>(k) / (p.warp_knots - 1));
    knots_y.push_back(std::max(kMinSpeed, rng.normal(1.0, p.warp_speed_std)));
  }
  std::vector<double> grid(static_cast<std::size_t>(L));
  std::iota(grid.begin(), grid.end(), 0.0);
  std::vector<double> speed = p.warp_knots == 1 ? std::vector<double>(grid.size(), knots_y[0])
                                                : natural_cubic_spline(knots_x, knots_y, grid);
  for (double& s : speed) s = std::max(kMinSpeed, s);

  std::vector<double> tau(static_cast<std::size_t>(L), 0.0);
  for (int i = 1; i < L; ++i) tau[i] = tau[i - 1] + 0.5 * (speed[i - 1] + speed[i]);
  const double norm = (L - 1) / tau.back();
  Signal out(L, 3);
  for (int i = 0; i < L; ++i) {
    const double t = std::clamp(tau[i] * norm, 0.0, static_cast<double>(L - 1));
    const int lo = std::min(static_cast<int>(t), L - 2);
    const double frac = t - lo;
    out.row(i) = (1.0 - frac) * w.row(lo) + frac * w.row(lo + 1);
  }
  return out;
}

}  // namespace

std::string to_string(TransformKind k) {
  switch (k) {
    case TransformKind::jitter: return "jitter";
    case TransformKind::scaling: return "scaling";
    case TransformKind::rotation: return "rotation";
    case TransformKind::channel_permute: return "channel_permute";
    case TransformKind::scramble: return "scramble";
    case TransformKind::time_warp: return "time_warp";
    case TransformKind::negation: return "negation";
    case TransformKind::reversing: return "reversing";
  }
  return "unknown";
}

void TransformParams::validate() const {
  if (!(jitter_std > 0 && scale_mean > 0 && scale_std > 0 && warp_knots > 0 && warp_speed_std > 0)) {
    throw ValidationError("transform parameters must be positive");
  }
  if (scramble_sections < 2) throw ValidationError("scramble needs at least 2 sections");
}

Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Vector3d axis;
  do {
    axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  } while (axis.norm() < 1e-12);
  axis.normalize();
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

std::vector<double> natural_cubic_spline(const std::vector<double>& xs, const std::vector<double>& ys,
                                         const std::vector<double>& at) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) throw ValidationError("spline needs at least two knots");
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = xs[i + 1] - xs[i];
    if (!(h[i] > 0)) throw ValidationError("spline knots must be strictly increasing");
  }
  // Second derivatives M with M[0] = M[n-1] = 0; Thomas algorithm on the interior.
  std::vector<double> m(n, 0.0);
  if (n > 2) {
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
      diag[i] = 2.0 * (h[i] + h[i + 1]);
      upper[i] = h[i + 1];
      rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
    }
    for (std::size_t i = 1; i < k; ++i) {
      const double f = h[i] / diag[i - 1];
      diag[i] -= f * upper[i - 1];
      rhs[i] -= f * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
  }
  std::vector<double> out;
  out.reserve(at.size());
  for (double x : at) {
    std::size_t i = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
    const double a = (xs[i + 1] - x) / h[i];
    const double b = (x - xs[i]) / h[i];
    out.push_back(a * ys[i] + b * ys[i + 1] +
                  ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h[i] * h[i] / 6.0);
  }
  return out;
}

Signal apply_transform(TransformKind kind, const Signal& w, const TransformParams& params, Rng& rng) {
  if (w.rows() < 1) throw ShapeError("transform input must have at least one timestep");
  switch (kind) {
    case TransformKind::jitter: {
      Signal out = w;
      for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] += rng.normal(0.0, params.jitter_std);
      return out;
    }
    case TransformKind::scaling: {
      Signal out = w;
      for (int c = 0; c < 3; ++c) out.col(c) *= rng.normal(params.scale_mean, params.scale_std);
      return out;
    }
    case TransformKind::rotation:
      return w * random_rotation(rng).transpose();
    case TransformKind::channel_permute: {
      const std::vector<int> p = non_identity_permutation(3, rng);
      Signal out(w.rows(), 3);
      for (int c = 0; c < 3; ++c) out.col(c) = w.col(p[c]);
      return out;
    }
    case TransformKind::scramble:
      if (w.rows() < params.scramble_sections) {
        throw ShapeError("scramble needs at least " + std::to_string(params.scramble_sections) + " timesteps");
      }
      return scramble(w, params.scramble_sections, rng);
    case TransformKind::time_warp:
      return time_warp(w, params, rng);
    case TransformKind::negation:
      return -w;
    case TransformKind::reversing:
      return w.colwise().reverse();
  }
  throw ValidationError("unknown transform");
}

std::pair<Signal, Signal> sample_contrastive_pair(const Signal& w, const TransformParams& params, Rng& rng) {
  const auto a = kAllTransforms[static_cast<std::size_t>(rng.uniform_int(0, kNumTransforms - 1))];
  const auto b = kAllTransforms[static_cast<std::size_t>(rng.uniform_int(0, kNumTransforms - 1))];
  Signal va = apply_transform(a, w, params, rng);
  Signal vb = apply_transform(b, w, params, rng);
  return {std::move(va), std::move(vb)};
}

Signal compose_transforms(const Signal& w, const AppliedMask& applied, const TransformParams& params, Rng& rng) {
  Signal out = w;
  for (int i = 0; i < kNumTransforms; ++i) {
    if (applied[static_cast<std::size_t>(i)]) out = apply_transform(kAllTransforms[static_cast<std::size_t>(i)], out, params, rng);
  }
  return out;
}

MultitaskSample sample_multitask_batch(const Signal& w, const TransformParams& params, Rng& rng) {
  MultitaskSample s;
  for (int& a : s.applied) a = rng.bernoulli(0.5) ? 1 : 0;
  s.transformed = compose_transforms(w, s.applied, params, rng);
  return s;
}

}  // namespace sslhar::augment
