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

#include "cantor/autograd.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace cantor::ag {
namespace {

thread_local bool g_grad_enabled = true;
std::atomic<long> g_dropout_fires{0};

using BackwardFn = std::function<void(Node&)>;

Var make(Tensor value, std::vector<Var> inputs, BackwardFn fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (!g_grad_enabled) return Var(node);
  bool needs = false;
  for (const auto& v : inputs) needs = needs || v.requires_grad();
  if (!needs) return Var(node);
  node->requires_grad = true;
  node->parents.reserve(inputs.size());
  for (auto& v : inputs) node->parents.push_back(v.node());
  node->backward_fn = std::move(fn);
  return Var(node);
}

void check_same(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                a.value().shape_str() + " vs " +
                                b.value().shape_str());
}

Node& parent(Node& out, std::size_t i) { return *out.parents[i]; }

template <typename F>
Var unary(const Var& a, F&& f, std::function<double(double x, double y)> dfdx) {
  Tensor y(a.rows(), a.cols());
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(x[i]);
  return make(std::move(y), {a}, [dfdx = std::move(dfdx)](Node& out) {
    Node& p = parent(out, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += out.grad[i] * dfdx(p.value[i], out.value[i]);
  });
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Var constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(node);
}

Var parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(node);
}

void backward(const Var& root) {
  if (root.value().size() != 1)
    throw std::invalid_argument("backward() needs a scalar root");
  if (!root.requires_grad()) return;
  // Iterative post-order DFS for the topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

Var add(const Var& a, const Var& b) {
  check_same(a, b, "add");
  Tensor y = a.value();
  y += b.value();
  return make(std::move(y), {a, b}, [](Node& out) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = parent(out, k);
      if (p.requires_grad) p.grad_buffer() += out.grad;
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_same(a, b, "sub");
  Tensor y = a.value();
  y.mat() -= b.value().mat();
  return make(std::move(y), {a, b}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& pb = parent(out, 1);
    if (pa.requires_grad) pa.grad_buffer() += out.grad;
    if (pb.requires_grad) pb.grad_buffer().mat() -= out.grad.mat();
  });
}

Var mul(const Var& a, const Var& b) {
  check_same(a, b, "mul");
  Tensor y(a.rows(), a.cols());
  y.mat() = a.value().mat().cwiseProduct(b.value().mat());
  return make(std::move(y), {a, b}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& pb = parent(out, 1);
    if (pa.requires_grad)
      pa.grad_buffer().mat() += out.grad.mat().cwiseProduct(pb.value.mat());
    if (pb.requires_grad)
      pb.grad_buffer().mat() += out.grad.mat().cwiseProduct(pa.value.mat());
  });
}

Var div(const Var& a, const Var& b) {
  check_same(a, b, "div");
  Tensor y(a.rows(), a.cols());
  y.mat() = a.value().mat().cwiseQuotient(b.value().mat());
  return make(std::move(y), {a, b}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& pb = parent(out, 1);
    if (pa.requires_grad)
      pa.grad_buffer().mat() += out.grad.mat().cwiseQuotient(pb.value.mat());
    if (pb.requires_grad)
      pb.grad_buffer().mat() -= out.grad.mat()
                                    .cwiseProduct(out.value.mat())
                                    .cwiseQuotient(pb.value.mat());
  });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols())
    throw std::invalid_argument("add_row: row must be 1x" +
                                std::to_string(a.cols()) + ", got " +
                                row.value().shape_str());
  Tensor y = a.value();
  y.mat().rowwise() += row.value().mat().row(0);
  return make(std::move(y), {a, row}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& pr = parent(out, 1);
    if (pa.requires_grad) pa.grad_buffer() += out.grad;
    if (pr.requires_grad)
      pr.grad_buffer().mat().row(0) += out.grad.mat().colwise().sum();
  });
}

Var mul_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols())
    throw std::invalid_argument("mul_row: row shape mismatch");
  Tensor y = a.value();
  y.mat().array().rowwise() *= row.value().mat().row(0).array();
  return make(std::move(y), {a, row}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& pr = parent(out, 1);
    if (pa.requires_grad) {
      MatrixRM g = out.grad.mat();
      g.array().rowwise() *= pr.value.mat().row(0).array();
      pa.grad_buffer().mat() += g;
    }
    if (pr.requires_grad)
      pr.grad_buffer().mat().row(0) +=
          out.grad.mat().cwiseProduct(pa.value.mat()).colwise().sum();
  });
}

Var add_col(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows())
    throw std::invalid_argument("add_col: col shape mismatch");
  Tensor y = a.value();
  y.mat().colwise() += col.value().mat().col(0);
  return make(std::move(y), {a, col}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& pc = parent(out, 1);
    if (pa.requires_grad) pa.grad_buffer() += out.grad;
    if (pc.requires_grad)
      pc.grad_buffer().mat().col(0) += out.grad.mat().rowwise().sum();
  });
}

Var mul_col(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows())
    throw std::invalid_argument("mul_col: col shape mismatch");
  Tensor y = a.value();
  y.mat().array().colwise() *= col.value().mat().col(0).array();
  return make(std::move(y), {a, col}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& pc = parent(out, 1);
    if (pa.requires_grad) {
      MatrixRM g = out.grad.mat();
      g.array().colwise() *= pc.value.mat().col(0).array();
      pa.grad_buffer().mat() += g;
    }
    if (pc.requires_grad)
      pc.grad_buffer().mat().col(0) +=
          out.grad.mat().cwiseProduct(pa.value.mat()).rowwise().sum();
  });
}

Var div_col(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows())
    throw std::invalid_argument("div_col: col shape mismatch");
  Tensor y = a.value();
  y.mat().array().colwise() /= col.value().mat().col(0).array();
  return make(std::move(y), {a, col}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& pc = parent(out, 1);
    const auto c = pc.value.mat().col(0).array();
    if (pa.requires_grad) {
      MatrixRM g = out.grad.mat();
      g.array().colwise() /= c;
      pa.grad_buffer().mat() += g;
    }
    if (pc.requires_grad)
      pc.grad_buffer().mat().col(0).array() -=
          out.grad.mat().cwiseProduct(out.value.mat()).rowwise().sum().array() /
          c;
  });
}

Var add_scalar_var(const Var& a, const Var& s) {
  if (s.value().size() != 1)
    throw std::invalid_argument("add_scalar_var: s must be 1x1");
  Tensor y = a.value();
  y.mat().array() += s.item();
  return make(std::move(y), {a, s}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& ps = parent(out, 1);
    if (pa.requires_grad) pa.grad_buffer() += out.grad;
    if (ps.requires_grad) ps.grad_buffer()[0] += out.grad.sum();
  });
}

Var mul_scalar_var(const Var& a, const Var& s) {
  if (s.value().size() != 1)
    throw std::invalid_argument("mul_scalar_var: s must be 1x1");
  Tensor y = a.value();
  y.mat() *= s.item();
  return make(std::move(y), {a, s}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& ps = parent(out, 1);
    if (pa.requires_grad) pa.grad_buffer().mat() += out.grad.mat() * ps.value[0];
    if (ps.requires_grad)
      ps.grad_buffer()[0] += out.grad.mat().cwiseProduct(pa.value.mat()).sum();
  });
}

Var scale(const Var& a, double s) {
  Tensor y = a.value();
  y.mat() *= s;
  return make(std::move(y), {a}, [s](Node& out) {
    Node& p = parent(out, 0);
    if (p.requires_grad) p.grad_buffer().mat() += out.grad.mat() * s;
  });
}

Var add_scalar(const Var& a, double s) {
  Tensor y = a.value();
  y.mat().array() += s;
  return make(std::move(y), {a}, [](Node& out) {
    Node& p = parent(out, 0);
    if (p.requires_grad) p.grad_buffer() += out.grad;
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dims " + a.value().shape_str() +
                                " x " + b.value().shape_str());
  Tensor y(a.rows(), b.cols());
  y.mat().noalias() = a.value().mat() * b.value().mat();
  return make(std::move(y), {a, b}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& pb = parent(out, 1);
    if (pa.requires_grad)
      pa.grad_buffer().mat().noalias() +=
          out.grad.mat() * pb.value.mat().transpose();
    if (pb.requires_grad)
      pb.grad_buffer().mat().noalias() +=
          pa.value.mat().transpose() * out.grad.mat();
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("matmul_nt: inner dims " +
                                a.value().shape_str() + " x " +
                                b.value().shape_str() + "^T");
  Tensor y(a.rows(), b.rows());
  y.mat().noalias() = a.value().mat() * b.value().mat().transpose();
  return make(std::move(y), {a, b}, [](Node& out) {
    Node& pa = parent(out, 0);
    Node& pb = parent(out, 1);
    if (pa.requires_grad)
      pa.grad_buffer().mat().noalias() += out.grad.mat() * pb.value.mat();
    if (pb.requires_grad)
      pb.grad_buffer().mat().noalias() +=
          out.grad.mat().transpose() * pa.value.mat();
  });
}

Var transpose(const Var& a) {
  Tensor y(a.cols(), a.rows());
  y.mat() = a.value().mat().transpose();
  return make(std::move(y), {a}, [](Node& out) {
    Node& p = parent(out, 0);
    if (p.requires_grad) p.grad_buffer().mat() += out.grad.mat().transpose();
  });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return unary(
      a,
      [](double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(const Var& a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var square(const Var& a) {
  return unary(
      a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Var abs(const Var& a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var sqrt(const Var& a) {
  return unary(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Var sum(const Var& a) {
  return make(Tensor::scalar(a.value().sum()), {a}, [](Node& out) {
    Node& p = parent(out, 0);
    if (p.requires_grad) p.grad_buffer().mat().array() += out.grad[0];
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw std::invalid_argument("mean of empty tensor");
  return make(Tensor::scalar(a.value().sum() / n), {a}, [n](Node& out) {
    Node& p = parent(out, 0);
    if (p.requires_grad) p.grad_buffer().mat().array() += out.grad[0] / n;
  });
}

Var sum_rows(const Var& a) {
  Tensor y(1, a.cols());
  y.mat().row(0) = a.value().mat().colwise().sum();
  return make(std::move(y), {a}, [](Node& out) {
    Node& p = parent(out, 0);
    if (p.requires_grad) p.grad_buffer().mat().rowwise() += out.grad.mat().row(0);
  });
}

Var mean_rows(const Var& a) {
  if (a.rows() == 0) throw std::invalid_argument("mean_rows of empty tensor");
  return scale(sum_rows(a), 1.0 / a.rows());
}

Var sum_cols(const Var& a) {
  Tensor y(a.rows(), 1);
  y.mat().col(0) = a.value().mat().rowwise().sum();
  return make(std::move(y), {a}, [](Node& out) {
    Node& p = parent(out, 0);
    if (p.requires_grad) p.grad_buffer().mat().colwise() += out.grad.mat().col(0);
  });
}

Var softmax_rows(const Var& a) {
  Tensor y = a.value();
  for (int r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    double mx = -INFINITY;
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (double& v : row) z += (v = std::exp(v - mx));
    for (double& v : row) v /= z;
  }
  return make(std::move(y), {a}, [](Node& out) {
    Node& p = parent(out, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.grad_buffer();
    for (int r = 0; r < out.value.rows(); ++r) {
      auto y = out.value.row(r);
      auto go = out.grad.row(r);
      double dot = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) dot += go[j] * y[j];
      auto gr = g.row(r);
      for (std::size_t j = 0; j < y.size(); ++j) gr[j] += y[j] * (go[j] - dot);
    }
  });
}

Var log_softmax_rows(const Var& a) {
  Tensor y = a.value();
  for (int r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    double mx = -INFINITY;
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double lz = mx + std::log(z);
    for (double& v : row) v -= lz;
  }
  return make(std::move(y), {a}, [](Node& out) {
    Node& p = parent(out, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.grad_buffer();
    for (int r = 0; r < out.value.rows(); ++r) {
      auto y = out.value.row(r);
      auto go = out.grad.row(r);
      double gs = 0.0;
      for (double v : go) gs += v;
      auto gr = g.row(r);
      for (std::size_t j = 0; j < y.size(); ++j)
        gr[j] += go[j] - std::exp(y[j]) * gs;
    }
  });
}

Var normalize_rows(const Var& a, double eps) {
  const int rows = a.rows();
  const int cols = a.cols();
  Tensor y(rows, cols);
  auto stats = std::make_shared<std::vector<double>>(2 * rows);  // sigma, d
  for (int r = 0; r < rows; ++r) {
    auto x = a.value().row(r);
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= cols;
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= cols;
    const double sigma = std::sqrt(var);
    const double d = sigma + eps;
    (*stats)[2 * r] = sigma;
    (*stats)[2 * r + 1] = d;
    auto yr = y.row(r);
    for (int c = 0; c < cols; ++c) yr[c] = (x[c] - mu) / d;
  }
  return make(std::move(y), {a}, [stats, cols](Node& out) {
    Node& p = parent(out, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.grad_buffer();
    for (int r = 0; r < out.value.rows(); ++r) {
      const double sigma = (*stats)[2 * r];
      const double d = (*stats)[2 * r + 1];
      auto go = out.grad.row(r);
      auto yv = out.value.row(r);  // xc / d
      double gmean = 0.0, gdot = 0.0;
      for (int c = 0; c < cols; ++c) {
        gmean += go[c];
        gdot += go[c] * yv[c] * d;  // sum g * xc
      }
      gmean /= cols;
      auto gr = g.row(r);
      for (int c = 0; c < cols; ++c) {
        double v = (go[c] - gmean) / d;
        if (sigma > 0.0) v -= gdot / (d * d) * (yv[c] * d) / (cols * sigma);
        gr[c] += v;
      }
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const int rows = parts[0].rows();
  int cols = 0;
  std::vector<int> offsets;
  for (const auto& p : parts) {
    if (p.rows() != rows)
      throw std::invalid_argument("concat_cols: row count mismatch");
    offsets.push_back(cols);
    cols += p.cols();
  }
  Tensor y(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k)
    y.mat().middleCols(offsets[k], parts[k].cols()) = parts[k].value().mat();
  return make(std::move(y), std::vector<Var>(parts.begin(), parts.end()),
              [offsets](Node& out) {
                for (std::size_t k = 0; k < out.parents.size(); ++k) {
                  Node& p = *out.parents[k];
                  if (p.requires_grad)
                    p.grad_buffer().mat() +=
                        out.grad.mat().middleCols(offsets[k], p.value.cols());
                }
              });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  const int cols = parts[0].cols();
  int rows = 0;
  std::vector<int> offsets;
  for (const auto& p : parts) {
    if (p.cols() != cols)
      throw std::invalid_argument("concat_rows: column count mismatch");
    offsets.push_back(rows);
    rows += p.rows();
  }
  Tensor y(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k)
    y.mat().middleRows(offsets[k], parts[k].rows()) = parts[k].value().mat();
  return make(std::move(y), std::vector<Var>(parts.begin(), parts.end()),
              [offsets](Node& out) {
                for (std::size_t k = 0; k < out.parents.size(); ++k) {
                  Node& p = *out.parents[k];
                  if (p.requires_grad)
                    p.grad_buffer().mat() +=
                        out.grad.mat().middleRows(offsets[k], p.value.rows());
                }
              });
}

Var slice_rows(const Var& a, int start, int count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw std::out_of_range("slice_rows out of range");
  Tensor y(count, a.cols());
  y.mat() = a.value().mat().middleRows(start, count);
  return make(std::move(y), {a}, [start, count](Node& out) {
    Node& p = parent(out, 0);
    if (p.requires_grad)
      p.grad_buffer().mat().middleRows(start, count) += out.grad.mat();
  });
}

Var slice_cols(const Var& a, int start, int count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw std::out_of_range("slice_cols out of range");
  Tensor y(a.rows(), count);
  y.mat() = a.value().mat().middleCols(start, count);
  return make(std::move(y), {a}, [start, count](Node& out) {
    Node& p = parent(out, 0);
    if (p.requires_grad)
      p.grad_buffer().mat().middleCols(start, count) += out.grad.mat();
  });
}

Var gather_rows(const Var& a, std::span<const int> index) {
  Tensor y(static_cast<int>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= a.rows())
      throw std::out_of_range("gather_rows: index " + std::to_string(index[i]) +
                              " outside [0, " + std::to_string(a.rows()) + ")");
    auto src = a.value().row(index[i]);
    std::copy(src.begin(), src.end(), y.row(static_cast<int>(i)).begin());
  }
  std::vector<int> idx(index.begin(), index.end());
  return make(std::move(y), {a}, [idx = std::move(idx)](Node& out) {
    Node& p = parent(out, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto src = out.grad.row(static_cast<int>(i));
      auto dst = g.row(idx[i]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var conv1d(const Var& x, const Var& weight, int kernel, int dilation,
           int stride) {
  const int t_in = x.rows();
  const int c_in = x.cols();
  if (weight.rows() != kernel * c_in)
    throw std::invalid_argument("conv1d: weight rows " +
                                std::to_string(weight.rows()) + " != kernel " +
                                std::to_string(kernel) + " x channels " +
                                std::to_string(c_in));
  if (kernel == 1 && stride == 1) return matmul(x, weight);
  const int t_out = (t_in + stride - 1) / stride;
  const int half = (kernel - 1) / 2;
  auto cols = std::make_shared<Tensor>(t_out, kernel * c_in);
  for (int t = 0; t < t_out; ++t) {
    for (int k = 0; k < kernel; ++k) {
      const int src = t * stride + (k - half) * dilation;
      if (src < 0 || src >= t_in) continue;
      std::copy_n(x.value().data() + static_cast<std::size_t>(src) * c_in, c_in,
                  cols->data() + static_cast<std::size_t>(t) * kernel * c_in +
                      static_cast<std::size_t>(k) * c_in);
    }
  }
  Tensor y(t_out, weight.cols());
  y.mat().noalias() = cols->mat() * weight.value().mat();
  return make(std::move(y), {x, weight},
              [cols, kernel, dilation, stride, half, t_in, c_in,
               t_out](Node& out) {
                Node& px = parent(out, 0);
                Node& pw = parent(out, 1);
                if (pw.requires_grad)
                  pw.grad_buffer().mat().noalias() +=
                      cols->mat().transpose() * out.grad.mat();
                if (!px.requires_grad) return;
                MatrixRM gcols = out.grad.mat() * pw.value.mat().transpose();
                Tensor& gx = px.grad_buffer();
                for (int t = 0; t < t_out; ++t) {
                  for (int k = 0; k < kernel; ++k) {
                    const int src = t * stride + (k - half) * dilation;
                    if (src < 0 || src >= t_in) continue;
                    double* dst = gx.data() + static_cast<std::size_t>(src) * c_in;
                    const double* g = gcols.data() +
                                      static_cast<std::size_t>(t) * kernel * c_in +
                                      static_cast<std::size_t>(k) * c_in;
                    for (int c = 0; c < c_in; ++c) dst[c] += g[c];
                  }
                }
              });
}

Var dropout(const Var& a, double p, Rng& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw std::invalid_argument("dropout probability must be < 1");
  auto mask = std::make_shared<Tensor>(a.rows(), a.cols());
  const double keep = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < mask->size(); ++i)
    (*mask)[i] = rng.uniform() < p ? 0.0 : keep;
  g_dropout_fires.fetch_add(1, std::memory_order_relaxed);
  Tensor y(a.rows(), a.cols());
  y.mat() = a.value().mat().cwiseProduct(mask->mat());
  return make(std::move(y), {a}, [mask](Node& out) {
    Node& pa = parent(out, 0);
    if (pa.requires_grad)
      pa.grad_buffer().mat() += out.grad.mat().cwiseProduct(mask->mat());
  });
}

Var detach(const Var& a) { return constant(a.value()); }

long dropout_fire_count() { return g_dropout_fires.load(); }

}  // namespace cantor::ag
