// Copyright 2026 The AttriPrior Authors.
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

// Reverse-mode automatic differentiation over dense tensors.
//
// A Graph is a tape: nodes are appended in creation order, which is also a
// topological order, so backward is a single reverse sweep. Every backward
// rule is written with the same public ops, so calling `grad` with
// `create_graph = true` yields gradient nodes that can be differentiated
// again (needed when a loss is itself a function of input gradients).
//
// A Graph is confined to one thread. Parameters may be bound as non-owning
// views so several threads can read the same tensors concurrently.

#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "attriprior/tensor.hpp"

namespace attriprior::ad {

enum class OpKind : std::uint8_t {
  Leaf,
  StopGradient,
  Add,
  Sub,
  Mul,
  Scale,
  Square,
  Reciprocal,
  Log,
  ClampMin,
  Relu,
  Sum,
  Expand,
  SumRows,
  BroadcastRows,
  RowSums,
  BroadcastCols,
  GatherRows,
  ScatterRows,
  Conv1d,
  Conv1dInputGrad,
  Conv1dFilterGrad,
  MaxOverTime,
  Unpool,
  Pick,
  Concat,
  Slice,
  Pad,
  MatMul,
  Transpose,
  Reshape,
  Softmax,
};

std::string_view op_name(OpKind op);

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph& graph() const { return *graph_; }
  std::uint32_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t numel() const { return value().numel(); }
  double item() const { return value().item(); }
  bool requires_grad() const;

 private:
  friend class Graph;
  Var(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

struct Node {
  OpKind op = OpKind::Leaf;
  std::vector<std::uint32_t> inputs;
  Tensor value;
  const Tensor* external = nullptr;  // non-owning leaf storage
  bool requires_grad = false;
  bool grad_blocked = false;

  // Op attributes.
  std::vector<std::size_t> index;  // gather ids, argmax positions, concat sizes
  double scalar = 0.0;             // scale factor, clamp floor
  std::size_t extent = 0;          // vocab rows, sequence length, pad total, filter width
  std::size_t offset = 0;          // slice/pad offset

  const Tensor& val() const { return external ? *external : value; }
};

/// Extra attributes passed when recording a node.
struct NodeAttrs {
  std::vector<std::size_t> index;
  double scalar = 0.0;
  std::size_t extent = 0;
  std::size_t offset = 0;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Owning leaf.
  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  /// Non-owning leaf; `value` must outlive the graph and stay unchanged.
  Var view(const Tensor& value, bool requires_grad = false);

  /// Gradients of scalar `root` with respect to each node in `wrt`.
  ///
  /// Nodes that cannot reach `root` through differentiable paths receive
  /// zeros. With `create_graph` the results are themselves differentiable;
  /// without it the graph is consumed and a later call throws.
  std::vector<Var> grad(Var root, std::span<const Var> wrt, bool create_graph = false);
  std::vector<Tensor> gradients(Var root, std::span<const Var> wrt);

  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  /// False while a non-differentiable backward pass is emitting nodes.
  bool recording() const { return recording_; }

  /// Low-level: appends an op node whose value is already computed.
  Var record(OpKind op, std::initializer_list<Var> inputs, Tensor value, NodeAttrs attrs = {});
  Var record(OpKind op, std::span<const Var> inputs, Tensor value, NodeAttrs attrs = {});

 private:
  friend class Var;

  void backward_rule(std::uint32_t id, Var upstream, const std::vector<char>& needed,
                     std::vector<std::int64_t>& grads);
  void accumulate(std::vector<std::int64_t>& grads, std::uint32_t target, Var contribution);

  std::deque<Node> nodes_;
  bool consumed_ = false;
  bool recording_ = true;
};

// Ops. Each validates operand shapes and throws ShapeError naming the op and
// the offending shapes.

Var stop_gradient(Var x);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var neg(Var x);
Var square(Var x);
Var reciprocal(Var x);
Var log(Var x);
Var clamp_min(Var x, double floor);
Var relu(Var x);

/// Sum of all elements, rank-0 result (64-bit accumulation).
Var sum(Var x);
/// Broadcasts a one-element tensor to `shape`.
Var expand(Var x, const Shape& shape);
/// [R x C] -> [C]
Var sum_rows(Var x);
/// [C] -> [R x C]
Var broadcast_rows(Var x, std::size_t rows);
/// [R x C] -> [R]
Var row_sums(Var x);
/// [R] -> [R x C]
Var broadcast_cols(Var x, std::size_t cols);

/// table [V x D], ids -> [n x D]
Var gather_rows(Var table, std::span<const std::size_t> ids);
/// grad [n x D] scattered (summed) into [rows x D]
Var scatter_rows(Var x, std::span<const std::size_t> ids, std::size_t rows);

/// input [L x D], filters [F x w x D] -> [L-w+1 x F]
Var conv1d(Var input, Var filters);
/// grad_out [T x F], filters [F x w x D] -> [length x D]
Var conv1d_input_grad(Var grad_out, Var filters, std::size_t length);
/// input [L x D], grad_out [T x F] -> [F x width x D]
Var conv1d_filter_grad(Var input, Var grad_out, std::size_t width);

/// [T x F] -> [F]; ties resolve to the lowest time index.
Var max_over_time(Var x);
/// grad [F] placed at rows `positions[f]` of a zero [T x F].
Var unpool(Var x, std::span<const std::size_t> positions, std::size_t length);
/// [T x F] -> [F] reading row `positions[f]` of each column.
Var pick(Var x, std::span<const std::size_t> positions);

/// Concatenates rank-1 tensors.
Var concat(std::span<const Var> parts);
Var slice(Var x, std::size_t offset, std::size_t length);
/// Places rank-1 `x` at `offset` inside zeros of length `total`.
Var pad(Var x, std::size_t offset, std::size_t total);

Var matmul(Var a, Var b);
Var transpose(Var x);
Var reshape(Var x, const Shape& shape);

/// Softmax of a rank-1 tensor (max-shifted for stability).
Var softmax(Var logits);

/// Single element of a rank-1 tensor as a rank-0 tensor.
Var select(Var x, std::size_t i);

/// Inverted dropout: zeroes each element with probability `rate` and scales
/// the rest by 1/(1-rate). The mask is a constant.
Var dropout(Var x, double rate, std::mt19937_64& rng);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace attriprior::ad
