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

#include <span>
#include <vector>

#include <Eigen/Core>

namespace sslhar::eval {

/// Counts [true, predicted]; throws ValidationError on an id outside [0, num_classes).
Eigen::MatrixXi confusion_matrix(std::span<const int> predictions, std::span<const int> labels, int num_classes);

/// Unweighted mean of per-class F1 over all `num_classes` classes. A class whose
/// precision or recall is undefined contributes 0.
double macro_f1(std::span<const int> predictions, std::span<const int> labels, int num_classes);

std::vector<double> per_class_f1(std::span<const int> predictions, std::span<const int> labels, int num_classes);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Population standard deviation.
MeanStd mean_std(std::span<const double> xs);

}  // namespace sslhar::eval
