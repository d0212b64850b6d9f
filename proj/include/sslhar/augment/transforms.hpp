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

#include <array>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "sslhar/data/types.hpp"
#include "sslhar/random.hpp"

namespace sslhar::augment {

using data::Signal;

enum class TransformKind { jitter, scaling, rotation, channel_permute, scramble, time_warp, negation, reversing };

inline constexpr int kNumTransforms = 8;
inline constexpr std::array<TransformKind, kNumTransforms> kAllTransforms{
    TransformKind::jitter,   TransformKind::scaling,   TransformKind::rotation, TransformKind::channel_permute,
    TransformKind::scramble, TransformKind::time_warp, TransformKind::negation, TransformKind::reversing};

std::string to_string(TransformKind k);

struct TransformParams {
  double jitter_std = 0.05;
  double scale_mean = 1.0;
  double scale_std = 0.1;
  int scramble_sections = 4;
  int warp_knots = 4;
  double warp_speed_std = 0.2;

  void validate() const;
};

Signal apply_transform(TransformKind kind, const Signal& w, const TransformParams& params, Rng& rng);

/// Uniform axis on the sphere, angle uniform in [0, 2*pi).
Eigen::Matrix3d random_rotation(Rng& rng);

/// Natural cubic spline through (xs, ys), evaluated at `at`.
std::vector<double> natural_cubic_spline(const std::vector<double>& xs, const std::vector<double>& ys,
                                         const std::vector<double>& at);

std::pair<Signal, Signal> sample_contrastive_pair(const Signal& w, const TransformParams& params, Rng& rng);

using AppliedMask = std::array<int, kNumTransforms>;

struct MultitaskSample {
  Signal transformed;
  AppliedMask applied{};
};

/// Applies the flagged transforms in enum order.
Signal compose_transforms(const Signal& w, const AppliedMask& applied, const TransformParams& params, Rng& rng);

MultitaskSample sample_multitask_batch(const Signal& w, const TransformParams& params, Rng& rng);

}  // namespace sslhar::augment
