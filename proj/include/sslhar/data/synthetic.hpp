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

#include "sslhar/data/types.hpp"

namespace sslhar::data {

/// Parameters of the synthetic activity generator.
///
/// Each class is a sum of per-channel sinusoids with its own frequencies,
/// amplitudes and gravity direction. Users differ by an amplitude gain, a
/// device orientation tilt and a tempo factor; every bout draws fresh phases.
struct SyntheticSpec {
  int num_classes = 3;
  int num_users = 6;
  double sample_rate_hz = 50.0;
  int window_length = 100;
  int total_windows = 2000;
  int min_bout_windows = 3;
  int max_bout_windows = 10;
  double noise_std = 0.3;
  double user_gain_std = 0.15;
  double user_tilt_rad = 0.35;
  double user_tempo_std = 0.06;
  double base_freq_hz = 1.0;
  double freq_step_hz = 0.35;
  /// Spread of the per-class gravity direction around +z.
  double class_gravity_std = 0.0;
  /// Spread of the per-class harmonic amplitudes; 0 gives every class the same profile.
  double class_amplitude_spread = 1.0;
  /// Per-bout multiplicative gain jitter.
  double bout_gain_std = 0.0;
  /// Locks the second harmonic phase to the first with a class-specific offset
  /// scaled by this value; 0 draws both phases independently per bout.
  double class_shape = 1.0;
  std::uint64_t seed = 7;
  std::string dataset_id = "synthetic";
};

Dataset make_synthetic(const SyntheticSpec& spec);

/// Generator with many classes and windows, used for sampling-law checks.
WindowSet make_synthetic_windows(int num_classes, int num_windows, int length, std::uint64_t seed);

}  // namespace sslhar::data
