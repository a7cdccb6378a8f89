// Copyright (c) 2026 The Cantor Authors
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

// Tape-free reverse-mode automatic differentiation over 2-D tensors.
//
// Every op returns a Var whose node remembers its inputs and a closure that
// pushes the output gradient back into them. backward() walks the graph in
// reverse topological order. Graphs are freed when the last Var referencing
// them goes out of scope; parameters are long-lived leaf nodes.

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "cantor/rng.hpp"
#include "cantor/tensor.hpp"

namespace cantor::ag {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;

  Tensor& grad_buffer() {
    if (grad.empty() && !value.empty())
      grad = Tensor(value.rows(), value.cols());
    return grad;
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() const { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  int rows() const { return node_->value.rows(); }
  int cols() const { return node_->value.cols(); }
  double item() const { return node_->value.item(); }
  const NodePtr& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }
  void zero_grad() { node_->grad = Tensor(); }

 private:
  NodePtr node_;
};

/// Leaf holding data that is never differentiated.
Var constant(Tensor value);
/// Trainable leaf.
Var parameter(Tensor value);

/// Accumulates d(root)/d(leaf) into every reachable node that requires grad.
/// root must be 1x1.
void backward(const Var& root);

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
bool grad_enabled();

// Elementwise binary, equal shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

// Broadcasting: row is 1 x cols(a); col is rows(a) x 1; s is 1x1.
Var add_row(const Var& a, const Var& row);
Var mul_row(const Var& a, const Var& row);
Var add_col(const Var& a, const Var& col);
Var mul_col(const Var& a, const Var& col);
Var div_col(const Var& a, const Var& col);
Var add_scalar_var(const Var& a, const Var& s);
Var mul_scalar_var(const Var& a, const Var& s);

Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

Var matmul(const Var& a, const Var& b);     // a b
Var matmul_nt(const Var& a, const Var& b);  // a b^T
Var transpose(const Var& a);

Var relu(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);
Var abs(const Var& a);
Var sqrt(const Var& a);

Var sum(const Var& a);        // 1x1
Var mean(const Var& a);       // 1x1
Var sum_rows(const Var& a);   // 1 x cols: sums over rows
Var mean_rows(const Var& a);  // 1 x cols
Var sum_cols(const Var& a);   // rows x 1: sums over columns

Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
/// (x - mean) / (std + eps) per row, biased std over the columns.
Var normalize_rows(const Var& a, double eps);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(const Var& a, int start, int count);
Var slice_cols(const Var& a, int start, int count);
/// out[i] = a[index[i]]; gradients scatter-add back.
Var gather_rows(const Var& a, std::span<const int> index);

/// 1-D convolution over time with "same" padding (zeros). weight is
/// (kernel * in_channels) x out_channels, tap-major. Output length is
/// ceil(T / stride).
Var conv1d(const Var& x, const Var& weight, int kernel, int dilation,
           int stride);

/// Inverted dropout; identity when p == 0.
Var dropout(const Var& a, double p, Rng& rng);
/// Same values, gradient blocked.
Var detach(const Var& a);

/// Number of times dropout actually masked something since process start.
long dropout_fire_count();

}  // namespace cantor::ag
