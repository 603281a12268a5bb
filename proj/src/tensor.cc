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

#include "interaug/tensor.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "interaug/kernels.h"

namespace interaug {

namespace {
std::int64_t shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i)
    os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}
}  // namespace

Tensor::Tensor(std::vector<int> shape, bool requires_grad) {
  node_ = std::make_shared<Node>();
  node_->values.assign(static_cast<std::size_t>(shape_size(shape)), 0.0);
  node_->shape = std::move(shape);
  node_->requires_grad = requires_grad;
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values,
               bool requires_grad) {
  if (shape_size(shape) != static_cast<std::int64_t>(values.size()))
    throw std::invalid_argument("tensor values length does not match shape " +
                                shape_str(shape));
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->values = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

std::vector<double>& Tensor::grad_buffer() {
  if (node_->grad.empty()) node_->grad.assign(node_->values.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.clear(); }

double Tensor::item() const {
  if (size() != 1) throw std::logic_error("item() requires a size-1 tensor");
  return node_->values[0];
}

double Tensor::at(int r, int c) const {
  return node_->values[static_cast<std::size_t>(r) * dim(1) + c];
}

Tensor Tensor::detached() const {
  return Tensor(node_->shape, node_->values, /*requires_grad=*/false);
}

void Tape::track(const Tensor& t) { touched_.push_back(t.node_); }

void Tape::record(std::function<void()> backward_step) {
  ops_.push_back(std::move(backward_step));
}

Tensor Tape::make_output(std::vector<int> shape, std::vector<double> values,
                         bool requires_grad) {
  Tensor out(std::move(shape), std::move(values), requires_grad);
  track(out);
  return out;
}

void Tape::check_finite(const Tensor& t, const char* op) const {
  for (double v : t.values())
    if (!std::isfinite(v))
      throw std::domain_error(std::string(op) + ": non-finite input value");
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    std::ostringstream os;
    os << "matmul: incompatible shapes ";
    os << "[" << (a.rank() == 2 ? std::to_string(a.dim(0)) + "x" +
                                      std::to_string(a.dim(1))
                                : "rank!=2")
       << "] x [";
    os << (b.rank() == 2 ? std::to_string(b.dim(0)) + "x" +
                               std::to_string(b.dim(1))
                         : "rank!=2")
       << "]";
    throw std::invalid_argument(os.str());
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  kernels::matmul(a.values().data(), b.values().data(), out.data(), m, k, n);
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor c = make_output({m, n}, std::move(out), rg);
  if (rg) {
    track(a);
    track(b);
    Tensor ta = a, tb = b, tc = c;
    record([ta, tb, tc, m, k, n]() mutable {
      if (!tc.has_grad()) return;
      const double* g = tc.grad().data();
      if (ta.requires_grad()) {
        // dA = dC * B^T
        std::vector<double> da(static_cast<std::size_t>(m) * k);
        kernels::matmul_nt(g, tb.values().data(), da.data(), m, n, k);
        auto& buf = ta.grad_buffer();
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += da[i];
      }
      if (tb.requires_grad()) {
        // dB = A^T * dC
        std::vector<double> db(static_cast<std::size_t>(k) * n);
        kernels::matmul_tn(ta.values().data(), g, db.data(), k, m, n);
        auto& buf = tb.grad_buffer();
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += db[i];
      }
    });
  }
  return c;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("add: shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  std::vector<double> out(a.values());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.values()[i];
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor c = make_output(a.shape(), std::move(out), rg);
  if (rg) {
    track(a);
    track(b);
    Tensor ta = a, tb = b, tc = c;
    record([ta, tb, tc]() mutable {
      if (!tc.has_grad()) return;
      const auto& g = tc.grad();
      if (ta.requires_grad()) {
        auto& buf = ta.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
      }
      if (tb.requires_grad()) {
        auto& buf = tb.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
      }
    });
  }
  return c;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("mul: shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  std::vector<double> out(a.values());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.values()[i];
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor c = make_output(a.shape(), std::move(out), rg);
  if (rg) {
    track(a);
    track(b);
    Tensor ta = a, tb = b, tc = c;
    record([ta, tb, tc]() mutable {
      if (!tc.has_grad()) return;
      const auto& g = tc.grad();
      if (ta.requires_grad()) {
        auto& buf = ta.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i)
          buf[i] += g[i] * tb.values()[i];
      }
      if (tb.requires_grad()) {
        auto& buf = tb.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i)
          buf[i] += g[i] * ta.values()[i];
      }
    });
  }
  return c;
}

Tensor Tape::add_row_broadcast(const Tensor& x, const Tensor& bias) {
  if (x.rank() != 2 || bias.rank() != 2 || bias.dim(0) != 1 ||
      bias.dim(1) != x.dim(1))
    throw std::invalid_argument("add_row_broadcast: need x[TxD] and bias[1xD], got " +
                                shape_str(x.shape()) + " and " +
                                shape_str(bias.shape()));
  const int rows = x.dim(0), cols = x.dim(1);
  std::vector<double> out(x.values());
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < cols; ++j)
      out[static_cast<std::size_t>(r) * cols + j] += bias.values()[j];
  const bool rg = x.requires_grad() || bias.requires_grad();
  Tensor c = make_output(x.shape(), std::move(out), rg);
  if (rg) {
    track(x);
    track(bias);
    Tensor tx = x, tb = bias, tc = c;
    record([tx, tb, tc, rows, cols]() mutable {
      if (!tc.has_grad()) return;
      const auto& g = tc.grad();
      if (tx.requires_grad()) {
        auto& buf = tx.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
      }
      if (tb.requires_grad()) {
        auto& buf = tb.grad_buffer();
        for (int r = 0; r < rows; ++r)
          for (int j = 0; j < cols; ++j)
            buf[j] += g[static_cast<std::size_t>(r) * cols + j];
      }
    });
  }
  return c;
}

Tensor Tape::scale(const Tensor& x, double s) {
  std::vector<double> out(x.values());
  for (double& v : out) v *= s;
  const bool rg = x.requires_grad();
  Tensor c = make_output(x.shape(), std::move(out), rg);
  if (rg) {
    track(x);
    Tensor tx = x, tc = c;
    record([tx, tc, s]() mutable {
      if (!tc.has_grad()) return;
      const auto& g = tc.grad();
      auto& buf = tx.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * s;
    });
  }
  return c;
}

Tensor Tape::tanh(const Tensor& x) {
  std::vector<double> out(x.values());
  for (double& v : out) v = std::tanh(v);
  const bool rg = x.requires_grad();
  Tensor c = make_output(x.shape(), std::move(out), rg);
  if (rg) {
    track(x);
    Tensor tx = x, tc = c;
    record([tx, tc]() mutable {
      if (!tc.has_grad()) return;
      const auto& g = tc.grad();
      auto& buf = tx.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = tc.values()[i];
        buf[i] += g[i] * (1.0 - y * y);
      }
    });
  }
  return c;
}

Tensor Tape::transpose(const Tensor& x) {
  if (x.rank() != 2)
    throw std::invalid_argument("transpose: need a 2-d tensor, got " +
                                shape_str(x.shape()));
  const int rows = x.dim(0), cols = x.dim(1);
  std::vector<double> out(x.values().size());
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < cols; ++j)
      out[static_cast<std::size_t>(j) * rows + r] =
          x.values()[static_cast<std::size_t>(r) * cols + j];
  const bool rg = x.requires_grad();
  Tensor c = make_output({cols, rows}, std::move(out), rg);
  if (rg) {
    track(x);
    Tensor tx = x, tc = c;
    record([tx, tc, rows, cols]() mutable {
      if (!tc.has_grad()) return;
      const auto& g = tc.grad();
      auto& buf = tx.grad_buffer();
      for (int r = 0; r < rows; ++r)
        for (int j = 0; j < cols; ++j)
          buf[static_cast<std::size_t>(r) * cols + j] +=
              g[static_cast<std::size_t>(j) * rows + r];
    });
  }
  return c;
}

Tensor Tape::softmax_rows(const Tensor& x) {
  if (x.rank() != 2)
    throw std::invalid_argument("softmax_rows: need a 2-d tensor, got " +
                                shape_str(x.shape()));
  check_finite(x, "softmax_rows");
  const int rows = x.dim(0), cols = x.dim(1);
  std::vector<double> out(x.values().size());
  kernels::softmax_rows(x.values().data(), out.data(), rows, cols);
  const bool rg = x.requires_grad();
  Tensor c = make_output(x.shape(), std::move(out), rg);
  if (rg) {
    track(x);
    Tensor tx = x, tc = c;
    record([tx, tc, rows, cols]() mutable {
      if (!tc.has_grad()) return;
      const auto& g = tc.grad();
      auto& buf = tx.grad_buffer();
      // dx_j = y_j * (g_j - sum_k g_k y_k) per row
      for (int r = 0; r < rows; ++r) {
        const double* y = tc.values().data() + static_cast<std::size_t>(r) * cols;
        const double* gr = g.data() + static_cast<std::size_t>(r) * cols;
        double dot = 0.0;
        for (int j = 0; j < cols; ++j) dot += gr[j] * y[j];
        double* br = buf.data() + static_cast<std::size_t>(r) * cols;
        for (int j = 0; j < cols; ++j) br[j] += y[j] * (gr[j] - dot);
      }
    });
  }
  return c;
}

Tensor Tape::hadamard_const(const Tensor& x, const std::vector<double>& mask) {
  if (mask.size() != x.values().size())
    throw std::invalid_argument("hadamard_const: mask size mismatch");
  std::vector<double> out(x.values());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const bool rg = x.requires_grad();
  Tensor c = make_output(x.shape(), std::move(out), rg);
  if (rg) {
    track(x);
    Tensor tx = x, tc = c;
    auto m = mask;
    record([tx, tc, m = std::move(m)]() mutable {
      if (!tc.has_grad()) return;
      const auto& g = tc.grad();
      auto& buf = tx.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * m[i];
    });
  }
  return c;
}

Tensor Tape::sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  const bool rg = x.requires_grad();
  Tensor c = make_output({1}, {s}, rg);
  if (rg) {
    track(x);
    Tensor tx = x, tc = c;
    record([tx, tc]() mutable {
      if (!tc.has_grad()) return;
      const double g = tc.grad()[0];
      auto& buf = tx.grad_buffer();
      for (double& v : buf) v += g;
    });
  }
  return c;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  if (ops_.empty())
    throw std::logic_error("backward: tape is empty");
  Tensor l = loss;
  l.grad_buffer()[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

void Tape::zero_grads() {
  for (auto& node : touched_) node->grad.clear();
}

void Tape::clear() {
  ops_.clear();
  touched_.clear();
}

}  // namespace interaug
