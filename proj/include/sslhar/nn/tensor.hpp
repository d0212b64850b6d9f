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

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace sslhar::nn {

using Shape = std::vector<int>;

/// Allocator with a fixed 64-byte alignment. Vectorised Eigen reductions
/// start at the first aligned element, so a fixed base alignment keeps the
/// summation order, and hence every result bit, independent of the heap.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// One vertex of the reverse-mode graph. Leaves (parameters, inputs) have no
/// backward function; interior nodes keep their parents alive until the
/// result tensor is released.
struct Node {
  Shape shape;
  Buffer value;
  Buffer grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

/// Shared handle to a dense row-major float64 array that records the
/// operations applied to it. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, Buffer values);
  template <class Alloc>
  Tensor(Shape shape, const std::vector<double, Alloc>& values)
      : Tensor(std::move(shape), Buffer(values.begin(), values.end())) {}

  /// Trainable leaf.
  static Tensor parameter(Shape shape, Buffer values);
  template <class Alloc>
  static Tensor parameter(Shape shape, const std::vector<double, Alloc>& values) {
    return parameter(std::move(shape), Buffer(values.begin(), values.end()));
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  /// Size of dimension `i`; negative indices count from the back.
  int dim(int i) const;
  std::size_t size() const { return node_->value.size(); }

  std::span<double> values() { return node_->value; }
  std::span<const double> values() const { return node_->value; }
  double item() const;
  double at(std::size_t i) const { return node_->value[i]; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  /// Gradient buffer; allocated (zeroed) on first access.
  std::span<double> grad();
  std::span<const double> grad() const;
  void zero_grad();

  /// Reverse-mode sweep from this scalar.
  void backward() const;

  /// Same values, cut from the graph.
  Tensor detach() const;
  /// Deep copy of values into a fresh leaf.
  Tensor clone() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

/// Whether newly created results record their history.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op result. History is kept only when grad mode is on and some
/// parent requires a gradient.
Tensor make_result(Shape shape, Buffer value,
                   std::vector<Tensor> parents,
                   std::function<void(Node&)> backward);

}  // namespace sslhar::nn
