// Copyright 2026 The InterAug-CTC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INTERAUG_TENSOR_H_
#define INTERAUG_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

// Minimal reverse-mode autodiff over dense 64-bit-real tensors.
//
// A Tensor is a value-semantic handle to a shared node (shape, values,
// optional gradient). A Tape records primitive ops in execution order; ops
// are recorded only when some input requires a gradient. backward() replays
// the tape in reverse, accumulating gradients additively into every
// requires-grad tensor reachable from the loss. A node's values are treated
// as immutable once it has been consumed by an op; parameter updates happen
// between tapes.

namespace interaug {

class Tape;

class Tensor {
 public:
  Tensor() = default;
  // Zero-filled tensor.
  Tensor(std::vector<int> shape, bool requires_grad = false);
  Tensor(std::vector<int> shape, std::vector<double> values,
         bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::int64_t size() const {
    return static_cast<std::int64_t>(node_->values.size());
  }
  bool requires_grad() const { return node_->requires_grad; }

  const std::vector<double>& values() const { return node_->values; }
  // For leaf initialization and optimizer updates; never call on a tensor
  // already consumed by a tape op.
  std::vector<double>& mutable_values() { return node_->values; }

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const { return node_->grad; }
  // Zero-initialized on first use.
  std::vector<double>& grad_buffer();
  void zero_grad();

  double item() const;              // value of a size-1 tensor
  double at(int r, int c) const;    // 2-d element access
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  // Grad-less copy of the values; cuts the backward path (conditioning
  // detach switch).
  Tensor detached() const;

 private:
  struct Node {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
  };
  std::shared_ptr<Node> node_;
  friend class Tape;
};

class Tape {
 public:
  // c = a(m x k) * b(k x n). Dimension error names both shapes.
  Tensor matmul(const Tensor& a, const Tensor& b);
  // Elementwise; shapes must match exactly.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  // x(T x D) + bias(1 x D) broadcast over rows.
  Tensor add_row_broadcast(const Tensor& x, const Tensor& bias);
  Tensor scale(const Tensor& x, double s);
  Tensor tanh(const Tensor& x);
  Tensor transpose(const Tensor& x);
  // Row-wise softmax of a 2-d tensor, stabilized by row-max subtraction.
  // Non-finite input is a numeric error.
  Tensor softmax_rows(const Tensor& x);
  // Elementwise product with a constant mask (no gradient into the mask).
  Tensor hadamard_const(const Tensor& x, const std::vector<double>& mask);
  Tensor sum(const Tensor& x);  // scalar

  // Support for ops with externally computed gradients (the CTC loss).
  // `backward_step` runs during the reverse sweep at this op's position.
  void record(std::function<void()> backward_step);
  void track(const Tensor& t);  // include t in zero_grads()
  Tensor make_output(std::vector<int> shape, std::vector<double> values,
                     bool requires_grad);

  // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. Gradients
  // accumulate additively on top of whatever is already in the buffers.
  void backward(const Tensor& loss);

  // Clears the gradient buffers of every tensor the tape has touched.
  void zero_grads();

  void clear();
  std::size_t num_ops() const { return ops_.size(); }

 private:
  void check_finite(const Tensor& t, const char* op) const;
  std::vector<std::function<void()>> ops_;
  std::vector<std::shared_ptr<Tensor::Node>> touched_;
};

}  // namespace interaug

#endif  // INTERAUG_TENSOR_H_
