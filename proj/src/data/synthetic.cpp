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

#include "sslhar/data/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "sslhar/errors.hpp"
#include "sslhar/random.hpp"

namespace sslhar::data {

namespace {

struct ClassProfile {
  double freq_hz;
  Eigen::Vector3d amp1;
  Eigen::Vector3d amp2;
  Eigen::Vector3d gravity;
  double shape_offset;
};

Eigen::Matrix3d random_tilt(double max_angle, Rng& rng) {
  Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
  axis.normalize();
  return Eigen::AngleAxisd(rng.uniform(0.0, max_angle), axis).toRotationMatrix();
}

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 1 || spec.num_users < 1 || spec.window_length < 1 || spec.total_windows < spec.num_users) {
    throw ValidationError("invalid synthetic dataset specification");
  }
  if (spec.min_bout_windows < 1 || spec.max_bout_windows < spec.min_bout_windows) {
    throw ValidationError("invalid bout length range");
  }
  Rng rng(spec.seed);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  std::vector<ClassProfile> classes;
  for (int c = 0; c < spec.num_classes; ++c) {
    ClassProfile p;
    p.freq_hz = spec.base_freq_hz + spec.freq_step_hz * c;
    for (int ch = 0; ch < 3; ++ch) {
      p.amp1[ch] = 0.7 + spec.class_amplitude_spread * rng.uniform(-0.3, 0.3);
      p.amp2[ch] = 0.25 + spec.class_amplitude_spread * rng.uniform(-0.25, 0.25);
    }
    p.gravity = Eigen::Vector3d(rng.normal(0.0, spec.class_gravity_std), rng.normal(0.0, spec.class_gravity_std), 1.0)
                    .normalized();
    p.shape_offset = spec.class_shape * 0.5 * std::numbers::pi * (c + 0.5) / spec.num_classes;
    classes.push_back(p);
  }

  Dataset ds;
  ds.dataset_id = spec.dataset_id;
  ds.sample_rate_hz = spec.sample_rate_hz;
  ds.sensor_position = SensorPosition::wrist;
  for (int c = 0; c < spec.num_classes; ++c) ds.class_names.push_back("activity_" + std::to_string(c));

  const int L = spec.window_length;
  for (int u = 0; u < spec.num_users; ++u) {
    const int n_windows = spec.total_windows / spec.num_users + (u < spec.total_windows % spec.num_users ? 1 : 0);
    const double gain = std::max(0.2, 1.0 + rng.normal(0.0, spec.user_gain_std));
    const double tempo = std::max(0.5, 1.0 + rng.normal(0.0, spec.user_tempo_std));
    const Eigen::Matrix3d tilt = random_tilt(spec.user_tilt_rad, rng);

    SensorSequence seq;
    seq.user_id = "u" + std::to_string(u + 1);
    seq.sample_rate_hz = spec.sample_rate_hz;
    seq.dataset_id = spec.dataset_id;
    seq.sensor_position = SensorPosition::wrist;
    seq.samples.resize(static_cast<Eigen::Index>(n_windows) * L, 3);
    seq.labels.reserve(static_cast<std::size_t>(n_windows) * static_cast<std::size_t>(L));

    int done = 0;
    while (done < n_windows) {
      const int bout = std::min(rng.uniform_int(spec.min_bout_windows, spec.max_bout_windows), n_windows - done);
      const int c = rng.uniform_int(0, spec.num_classes - 1);
      const ClassProfile& p = classes[static_cast<std::size_t>(c)];
      const double f = p.freq_hz * tempo * (1.0 + rng.normal(0.0, 0.03));
      const double bout_gain = std::max(0.2, 1.0 + rng.normal(0.0, spec.bout_gain_std));
      Eigen::Vector3d ph1, ph2;
      for (int ch = 0; ch < 3; ++ch) {
        ph1[ch] = rng.uniform(0.0, kTwoPi);
        ph2[ch] = rng.uniform(0.0, kTwoPi);
        if (spec.class_shape != 0.0) ph2[ch] = 2.0 * ph1[ch] + p.shape_offset;
      }
      for (int i = 0; i < bout * L; ++i) {
        const double t = i / spec.sample_rate_hz;
        Eigen::Vector3d v = p.gravity;
        for (int ch = 0; ch < 3; ++ch) {
          v[ch] += p.amp1[ch] * std::sin(kTwoPi * f * t + ph1[ch]) + p.amp2[ch] * std::sin(2.0 * kTwoPi * f * t + ph2[ch]);
        }
        v = gain * bout_gain * (tilt * v);
        for (int ch = 0; ch < 3; ++ch) v[ch] += rng.normal(0.0, spec.noise_std);
        seq.samples.row(static_cast<Eigen::Index>(done) * L + i) = v.transpose();
        seq.labels.push_back(c);
      }
      done += bout;
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

WindowSet make_synthetic_windows(int num_classes, int num_windows, int length, std::uint64_t seed) {
  if (num_classes < 1 || num_windows < 1 || length < 1) throw ValidationError("invalid synthetic window request");
  Rng rng(seed);
  WindowSet ws;
  ws.window_length_samples = length;
  ws.sample_rate_hz = 50.0;
  ws.dataset_id = "synthetic_windows";
  for (int c = 0; c < num_classes; ++c) ws.class_names.push_back("activity_" + std::to_string(c));
  // Class c is drawn with probability proportional to c + 1.
  std::vector<double> weights;
  for (int c = 0; c < num_classes; ++c) weights.push_back(c + 1.0);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  ws.windows.reserve(static_cast<std::size_t>(num_windows));
  for (int i = 0; i < num_windows; ++i) {
    Window w;
    w.label = pick(rng.engine());
    w.user_id = "u" + std::to_string(1 + i % 10);
    w.origin_index = i;
    w.values = Signal::Constant(length, 3, static_cast<double>(w.label));
    ws.windows.push_back(std::move(w));
  }
  return ws;
}

}  // namespace sslhar::data
