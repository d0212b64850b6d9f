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

#include "sslhar/eval/metrics.hpp"

#include <cmath>
#include <string>

#include "sslhar/errors.hpp"

namespace sslhar::eval {

namespace {

void check_inputs(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw ValidationError("predictions and labels differ in length (" + std::to_string(predictions.size()) +
                          " vs " + std::to_string(labels.size()) + ")");
  }
  if (labels.empty()) throw ValidationError("metric needs at least one sample");
}

}  // namespace

Eigen::MatrixXi confusion_matrix(std::span<const int> predictions, std::span<const int> labels, int num_classes) {
  check_inputs(predictions, labels);
  if (num_classes < 1) throw ValidationError("num_classes must be positive");
  Eigen::MatrixXi cm = Eigen::MatrixXi::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i], p = predictions[i];
    if (y < 0 || y >= num_classes || p < 0 || p >= num_classes) {
      throw ValidationError("class id out of range [0, " + std::to_string(num_classes) + "): label " +
                            std::to_string(y) + ", prediction " + std::to_string(p));
    }
    ++cm(y, p);
  }
  return cm;
}

std::vector<double> per_class_f1(std::span<const int> predictions, std::span<const int> labels, int num_classes) {
  const Eigen::MatrixXi cm = confusion_matrix(predictions, labels, num_classes);
  std::vector<double> out(static_cast<std::size_t>(num_classes), 0.0);
  for (int c = 0; c < num_classes; ++c) {
    const double tp = cm(c, c);
    const double predicted = cm.col(c).sum();
    const double actual = cm.row(c).sum();
    if (predicted == 0 || actual == 0 || tp == 0) continue;
    const double p = tp / predicted, r = tp / actual;
    out[static_cast<std::size_t>(c)] = 2.0 * p * r / (p + r);
  }
  return out;
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels, int num_classes) {
  double total = 0.0;
  for (double f : per_class_f1(predictions, labels, num_classes)) total += f;
  return total / num_classes;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  check_inputs(predictions, labels);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

MeanStd mean_std(std::span<const double> xs) {
  if (xs.empty()) return {};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

}  // namespace sslhar::eval
