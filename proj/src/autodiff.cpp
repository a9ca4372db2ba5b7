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

#include "attriprior/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attriprior/error.hpp"
#include "attriprior/kernels.hpp"

namespace attriprior::ad {

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::Leaf: return "leaf";
    case OpKind::StopGradient: return "stop_gradient";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::Square: return "square";
    case OpKind::Reciprocal: return "reciprocal";
    case OpKind::Log: return "log";
    case OpKind::ClampMin: return "clamp_min";
    case OpKind::Relu: return "relu";
    case OpKind::Sum: return "sum";
    case OpKind::Expand: return "expand";
    case OpKind::SumRows: return "sum_rows";
    case OpKind::BroadcastRows: return "broadcast_rows";
    case OpKind::RowSums: return "row_sums";
    case OpKind::BroadcastCols: return "broadcast_cols";
    case OpKind::GatherRows: return "gather_rows";
    case OpKind::ScatterRows: return "scatter_rows";
    case OpKind::Conv1d: return "conv1d";
    case OpKind::Conv1dInputGrad: return "conv1d_input_grad";
    case OpKind::Conv1dFilterGrad: return "conv1d_filter_grad";
    case OpKind::MaxOverTime: return "max_over_time";
    case OpKind::Unpool: return "unpool";
    case OpKind::Pick: return "pick";
    case OpKind::Concat: return "concat";
    case OpKind::Slice: return "slice";
    case OpKind::Pad: return "pad";
    case OpKind::MatMul: return "matmul";
    case OpKind::Transpose: return "transpose";
    case OpKind::Reshape: return "reshape";
    case OpKind::Softmax: return "softmax";
  }
  return "unknown";
}

const Tensor& Var::value() const { return graph_->nodes_[id_].val(); }
bool Var::requires_grad() const { return graph_->nodes_[id_].requires_grad; }

namespace {

[[noreturn]] void shape_error(std::string_view op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

[[noreturn]] void shape_mismatch(std::string_view op, const Shape& a, const Shape& b) {
  shape_error(op, "shape mismatch " + shape_to_string(a) + " vs " + shape_to_string(b));
}

void require_rank(std::string_view op, Var x, std::size_t rank) {
  if (x.shape().size() != rank) {
    shape_error(op, "expected rank " + std::to_string(rank) + ", got shape " + shape_to_string(x.shape()));
  }
}

void require_same(std::string_view op, Var a, Var b) {
  if (a.shape() != b.shape()) shape_mismatch(op, a.shape(), b.shape());
}

Tensor like(const Tensor& t) { return Tensor(t.shape()); }

template <class F>
Tensor map(const Tensor& x, F f) {
  Tensor out = like(x);
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out = like(a);
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

Tensor step_mask(const Tensor& x, double threshold) {
  return map(x, [threshold](double v) { return v > threshold ? 1.0 : 0.0; });
}

kernels::ConvDims conv_dims(const Shape& input, const Shape& filters) {
  return kernels::ConvDims{input[0], input[1], filters[0], filters[1]};
}

}  // namespace

Var Graph::leaf(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NumericError("leaf: non-finite value");
  Node node;
  node.op = OpKind::Leaf;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::view(const Tensor& value, bool requires_grad) {
  Node node;
  node.op = OpKind::Leaf;
  node.external = &value;
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::record(OpKind op, std::initializer_list<Var> inputs, Tensor value, NodeAttrs attrs) {
  return record(op, std::span<const Var>(inputs.begin(), inputs.size()), std::move(value), std::move(attrs));
}

Var Graph::record(OpKind op, std::span<const Var> inputs, Tensor value, NodeAttrs attrs) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op_name(op)) + ": non-finite value produced");
  }
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  bool any_requires = false;
  for (const Var& in : inputs) {
    if (&in.graph() != this) throw Error(std::string(op_name(op)) + ": operand belongs to a different graph");
    node.inputs.push_back(in.id());
    any_requires = any_requires || nodes_[in.id()].requires_grad;
  }
  node.grad_blocked = op == OpKind::StopGradient;
  node.requires_grad = recording_ && any_requires && !node.grad_blocked;
  node.index = std::move(attrs.index);
  node.scalar = attrs.scalar;
  node.extent = attrs.extent;
  node.offset = attrs.offset;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Graph::accumulate(std::vector<std::int64_t>& grads, std::uint32_t target, Var contribution) {
  if (grads[target] < 0) {
    grads[target] = contribution.id();
  } else {
    grads[target] = add(Var(this, static_cast<std::uint32_t>(grads[target])), contribution).id();
  }
}

std::vector<Var> Graph::grad(Var root, std::span<const Var> wrt, bool create_graph) {
  if (consumed_) {
    throw Error("backward: graph was consumed by an earlier backward pass without create_graph");
  }
  if (&root.graph() != this) throw Error("backward: root belongs to a different graph");
  if (root.numel() != 1) {
    throw ShapeError("backward: root must be scalar, got shape " + shape_to_string(root.shape()));
  }

  const std::size_t n = root.id() + 1;
  std::vector<char> needed(n, 0);
  for (const Var& w : wrt) {
    if (&w.graph() != this) throw Error("backward: wrt node belongs to a different graph");
    if (w.id() < n) needed[w.id()] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (needed[i] || !nodes_[i].requires_grad) continue;
    for (std::uint32_t in : nodes_[i].inputs) {
      if (needed[in]) {
        needed[i] = 1;
        break;
      }
    }
  }

  const bool was_recording = recording_;
  recording_ = create_graph && was_recording;
  std::vector<Var> results;
  try {
    std::vector<std::int64_t> grads(n, -1);
    grads[root.id()] = constant(Tensor(root.shape(), 1.0)).id();
    for (std::size_t i = n; i-- > 0;) {
      if (!needed[i] || grads[i] < 0 || nodes_[i].op == OpKind::Leaf) continue;
      backward_rule(static_cast<std::uint32_t>(i), Var(this, static_cast<std::uint32_t>(grads[i])), needed, grads);
    }
    results.reserve(wrt.size());
    for (const Var& w : wrt) {
      if (w.id() < n && grads[w.id()] >= 0) {
        results.push_back(Var(this, static_cast<std::uint32_t>(grads[w.id()])));
      } else {
        results.push_back(constant(Tensor(w.shape())));
      }
    }
  } catch (...) {
    recording_ = was_recording;
    throw;
  }
  recording_ = was_recording;
  if (!create_graph) consumed_ = true;
  return results;
}

std::vector<Tensor> Graph::gradients(Var root, std::span<const Var> wrt) {
  std::vector<Tensor> out;
  for (const Var& g : grad(root, wrt, false)) out.push_back(g.value());
  return out;
}

void Graph::backward_rule(std::uint32_t id, Var upstream, const std::vector<char>& needed,
                          std::vector<std::int64_t>& grads) {
  // Copy what we need: recording new nodes must not alias `node`.
  const Node& node = nodes_[id];
  const OpKind op = node.op;
  const std::vector<std::uint32_t> inputs = node.inputs;
  const std::vector<std::size_t> index = node.index;
  const double scalar = node.scalar;
  const std::size_t extent = node.extent;
  const std::size_t offset = node.offset;
  Var self(this, id);
  auto in = [&](std::size_t k) { return Var(this, inputs[k]); };
  auto want = [&](std::size_t k) { return needed[inputs[k]] != 0; };
  auto give = [&](std::size_t k, Var g) { accumulate(grads, inputs[k], g); };
  const Var& g = upstream;

  switch (op) {
    case OpKind::Leaf:
    case OpKind::StopGradient:
      break;
    case OpKind::Add:
      if (want(0)) give(0, g);
      if (want(1)) give(1, g);
      break;
    case OpKind::Sub:
      if (want(0)) give(0, g);
      if (want(1)) give(1, neg(g));
      break;
    case OpKind::Mul:
      if (want(0)) give(0, mul(g, in(1)));
      if (want(1)) give(1, mul(g, in(0)));
      break;
    case OpKind::Scale:
      give(0, scale(g, scalar));
      break;
    case OpKind::Square:
      give(0, scale(mul(g, in(0)), 2.0));
      break;
    case OpKind::Reciprocal:
      // d(1/x) = -1/x^2 = -r*r
      give(0, neg(mul(g, square(self))));
      break;
    case OpKind::Log:
      give(0, mul(g, reciprocal(in(0))));
      break;
    case OpKind::ClampMin:
      give(0, mul(g, constant(step_mask(in(0).value(), scalar))));
      break;
    case OpKind::Relu:
      // Subgradient 0 at exactly 0.
      give(0, mul(g, constant(step_mask(in(0).value(), 0.0))));
      break;
    case OpKind::Sum:
      give(0, expand(g, in(0).shape()));
      break;
    case OpKind::Expand:
      give(0, reshape(sum(g), in(0).shape()));
      break;
    case OpKind::SumRows:
      give(0, broadcast_rows(g, in(0).shape()[0]));
      break;
    case OpKind::BroadcastRows:
      give(0, sum_rows(g));
      break;
    case OpKind::RowSums:
      give(0, broadcast_cols(g, in(0).shape()[1]));
      break;
    case OpKind::BroadcastCols:
      give(0, row_sums(g));
      break;
    case OpKind::GatherRows:
      give(0, scatter_rows(g, index, in(0).shape()[0]));
      break;
    case OpKind::ScatterRows:
      give(0, gather_rows(g, index));
      break;
    case OpKind::Conv1d:
      if (want(0)) give(0, conv1d_input_grad(g, in(1), in(0).shape()[0]));
      if (want(1)) give(1, conv1d_filter_grad(in(0), g, in(1).shape()[1]));
      break;
    case OpKind::Conv1dInputGrad:
      // inputs: grad_out, filters
      if (want(0)) give(0, conv1d(g, in(1)));
      if (want(1)) give(1, conv1d_filter_grad(g, in(0), in(1).shape()[1]));
      break;
    case OpKind::Conv1dFilterGrad:
      // inputs: input, grad_out
      if (want(0)) give(0, conv1d_input_grad(in(1), g, in(0).shape()[0]));
      if (want(1)) give(1, conv1d(in(0), g));
      break;
    case OpKind::MaxOverTime:
      give(0, unpool(g, index, in(0).shape()[0]));
      break;
    case OpKind::Unpool:
      give(0, pick(g, index));
      break;
    case OpKind::Pick:
      give(0, unpool(g, index, extent));
      break;
    case OpKind::Concat: {
      std::size_t at = 0;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        const std::size_t len = index[k];
        if (want(k)) give(k, slice(g, at, len));
        at += len;
      }
      break;
    }
    case OpKind::Slice:
      give(0, pad(g, offset, in(0).shape()[0]));
      break;
    case OpKind::Pad:
      give(0, slice(g, offset, in(0).shape()[0]));
      break;
    case OpKind::MatMul:
      if (want(0)) give(0, matmul(g, transpose(in(1))));
      if (want(1)) give(1, matmul(transpose(in(0)), g));
      break;
    case OpKind::Transpose:
      give(0, transpose(g));
      break;
    case OpKind::Reshape:
      give(0, reshape(g, in(0).shape()));
      break;
    case OpKind::Softmax: {
      // dz = y * (g - sum(g * y))
      Var inner = sum(mul(g, self));
      give(0, mul(self, sub(g, expand(inner, self.shape()))));
      break;
    }
  }
}

Var stop_gradient(Var x) { return x.graph().record(OpKind::StopGradient, {x}, x.value()); }

Var add(Var a, Var b) {
  require_same("add", a, b);
  return a.graph().record(OpKind::Add, {a, b}, zip(a.value(), b.value(), std::plus<>()));
}

Var sub(Var a, Var b) {
  require_same("sub", a, b);
  return a.graph().record(OpKind::Sub, {a, b}, zip(a.value(), b.value(), std::minus<>()));
}

Var mul(Var a, Var b) {
  require_same("mul", a, b);
  return a.graph().record(OpKind::Mul, {a, b}, zip(a.value(), b.value(), std::multiplies<>()));
}

Var scale(Var x, double factor) {
  NodeAttrs attrs;
  attrs.scalar = factor;
  return x.graph().record(OpKind::Scale, {x}, map(x.value(), [factor](double v) { return v * factor; }),
                          std::move(attrs));
}

Var neg(Var x) { return scale(x, -1.0); }

Var square(Var x) { return x.graph().record(OpKind::Square, {x}, map(x.value(), [](double v) { return v * v; })); }

Var reciprocal(Var x) {
  return x.graph().record(OpKind::Reciprocal, {x}, map(x.value(), [](double v) { return 1.0 / v; }));
}

Var log(Var x) {
  for (double v : x.value().data()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive operand " + std::to_string(v));
  }
  return x.graph().record(OpKind::Log, {x}, map(x.value(), [](double v) { return std::log(v); }));
}

Var clamp_min(Var x, double floor) {
  NodeAttrs attrs;
  attrs.scalar = floor;
  return x.graph().record(OpKind::ClampMin, {x}, map(x.value(), [floor](double v) { return std::max(v, floor); }),
                          std::move(attrs));
}

Var relu(Var x) {
  return x.graph().record(OpKind::Relu, {x}, map(x.value(), [](double v) { return v > 0.0 ? v : 0.0; }));
}

Var sum(Var x) { return x.graph().record(OpKind::Sum, {x}, Tensor::scalar(x.value().sum())); }

Var expand(Var x, const Shape& shape) {
  if (x.numel() != 1) shape_error("expand", "operand must hold one value, got " + shape_to_string(x.shape()));
  return x.graph().record(OpKind::Expand, {x}, Tensor(shape, x.value()[0]));
}

Var sum_rows(Var x) {
  require_rank("sum_rows", x, 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  Tensor out(Shape{cols});
  const Tensor& v = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c] += v[r * cols + c];
  }
  return x.graph().record(OpKind::SumRows, {x}, std::move(out));
}

Var broadcast_rows(Var x, std::size_t rows) {
  require_rank("broadcast_rows", x, 1);
  const std::size_t cols = x.shape()[0];
  Tensor out(Shape{rows, cols});
  const Tensor& v = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return x.graph().record(OpKind::BroadcastRows, {x}, std::move(out));
}

Var row_sums(Var x) {
  require_rank("row_sums", x, 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  Tensor out(Shape{rows});
  const Tensor& v = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += v[r * cols + c];
    out[r] = acc;
  }
  return x.graph().record(OpKind::RowSums, {x}, std::move(out));
}

Var broadcast_cols(Var x, std::size_t cols) {
  require_rank("broadcast_cols", x, 1);
  const std::size_t rows = x.shape()[0];
  Tensor out(Shape{rows, cols});
  const Tensor& v = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = v[r];
  }
  return x.graph().record(OpKind::BroadcastCols, {x}, std::move(out));
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
  require_rank("gather_rows", table, 2);
  const std::size_t rows = table.shape()[0], cols = table.shape()[1];
  Tensor out(Shape{ids.size(), cols});
  const Tensor& v = table.value();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows) {
      shape_error("gather_rows", "id " + std::to_string(ids[i]) + " out of range for table " +
                                     shape_to_string(table.shape()));
    }
    std::copy_n(v.data().begin() + static_cast<std::ptrdiff_t>(ids[i] * cols), cols,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  NodeAttrs attrs;
  attrs.index.assign(ids.begin(), ids.end());
  return table.graph().record(OpKind::GatherRows, {table}, std::move(out), std::move(attrs));
}

Var scatter_rows(Var x, std::span<const std::size_t> ids, std::size_t rows) {
  require_rank("scatter_rows", x, 2);
  if (x.shape()[0] != ids.size()) {
    shape_error("scatter_rows", "operand " + shape_to_string(x.shape()) + " vs " + std::to_string(ids.size()) + " ids");
  }
  const std::size_t cols = x.shape()[1];
  Tensor out(Shape{rows, cols});
  const Tensor& v = x.value();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows) shape_error("scatter_rows", "id " + std::to_string(ids[i]) + " out of range");
    for (std::size_t c = 0; c < cols; ++c) out[ids[i] * cols + c] += v[i * cols + c];
  }
  NodeAttrs attrs;
  attrs.index.assign(ids.begin(), ids.end());
  attrs.extent = rows;
  return x.graph().record(OpKind::ScatterRows, {x}, std::move(out), std::move(attrs));
}

Var conv1d(Var input, Var filters) {
  require_rank("conv1d", input, 2);
  require_rank("conv1d", filters, 3);
  const Shape& is = input.shape();
  const Shape& fs = filters.shape();
  if (is[1] != fs[2] || is[0] < fs[1] || fs[1] == 0) shape_mismatch("conv1d", is, fs);
  const auto d = conv_dims(is, fs);
  Tensor out(Shape{d.positions(), d.count});
  kernels::conv1d(d, input.value().data(), filters.value().data(), out.data());
  return input.graph().record(OpKind::Conv1d, {input, filters}, std::move(out));
}

Var conv1d_input_grad(Var grad_out, Var filters, std::size_t length) {
  require_rank("conv1d_input_grad", grad_out, 2);
  require_rank("conv1d_input_grad", filters, 3);
  const Shape& gs = grad_out.shape();
  const Shape& fs = filters.shape();
  if (fs[1] == 0 || length < fs[1] || gs[0] != length - fs[1] + 1 || gs[1] != fs[0]) {
    shape_mismatch("conv1d_input_grad", gs, fs);
  }
  const kernels::ConvDims d{length, fs[2], fs[0], fs[1]};
  Tensor out(Shape{length, fs[2]});
  kernels::conv1d_input_grad(d, grad_out.value().data(), filters.value().data(), out.data());
  NodeAttrs attrs;
  attrs.extent = length;
  return grad_out.graph().record(OpKind::Conv1dInputGrad, {grad_out, filters}, std::move(out), std::move(attrs));
}

Var conv1d_filter_grad(Var input, Var grad_out, std::size_t width) {
  require_rank("conv1d_filter_grad", input, 2);
  require_rank("conv1d_filter_grad", grad_out, 2);
  const Shape& is = input.shape();
  const Shape& gs = grad_out.shape();
  if (width == 0 || is[0] < width || gs[0] != is[0] - width + 1) shape_mismatch("conv1d_filter_grad", is, gs);
  const kernels::ConvDims d{is[0], is[1], gs[1], width};
  Tensor out(Shape{gs[1], width, is[1]});
  kernels::conv1d_filter_grad(d, input.value().data(), grad_out.value().data(), out.data());
  NodeAttrs attrs;
  attrs.extent = width;
  return input.graph().record(OpKind::Conv1dFilterGrad, {input, grad_out}, std::move(out), std::move(attrs));
}

Var max_over_time(Var x) {
  require_rank("max_over_time", x, 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (rows == 0) shape_error("max_over_time", "empty time axis");
  const Tensor& v = x.value();
  Tensor out(Shape{cols});
  std::vector<std::size_t> arg(cols, 0);
  for (std::size_t c = 0; c < cols; ++c) {
    double best = v[c];
    for (std::size_t r = 1; r < rows; ++r) {
      if (v[r * cols + c] > best) {
        best = v[r * cols + c];
        arg[c] = r;
      }
    }
    out[c] = best;
  }
  NodeAttrs attrs;
  attrs.index = std::move(arg);
  return x.graph().record(OpKind::MaxOverTime, {x}, std::move(out), std::move(attrs));
}

Var unpool(Var x, std::span<const std::size_t> positions, std::size_t length) {
  require_rank("unpool", x, 1);
  const std::size_t cols = x.shape()[0];
  if (positions.size() != cols) shape_error("unpool", "positions do not match " + shape_to_string(x.shape()));
  Tensor out(Shape{length, cols});
  for (std::size_t c = 0; c < cols; ++c) {
    if (positions[c] >= length) shape_error("unpool", "position out of range");
    out[positions[c] * cols + c] = x.value()[c];
  }
  NodeAttrs attrs;
  attrs.index.assign(positions.begin(), positions.end());
  attrs.extent = length;
  return x.graph().record(OpKind::Unpool, {x}, std::move(out), std::move(attrs));
}

Var pick(Var x, std::span<const std::size_t> positions) {
  require_rank("pick", x, 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (positions.size() != cols) shape_error("pick", "positions do not match " + shape_to_string(x.shape()));
  Tensor out(Shape{cols});
  for (std::size_t c = 0; c < cols; ++c) {
    if (positions[c] >= rows) shape_error("pick", "position out of range");
    out[c] = x.value()[positions[c] * cols + c];
  }
  NodeAttrs attrs;
  attrs.index.assign(positions.begin(), positions.end());
  attrs.extent = rows;
  return x.graph().record(OpKind::Pick, {x}, std::move(out), std::move(attrs));
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) shape_error("concat", "no operands");
  std::vector<double> values;
  NodeAttrs attrs;
  for (const Var& p : parts) {
    require_rank("concat", p, 1);
    values.insert(values.end(), p.value().data().begin(), p.value().data().end());
    attrs.index.push_back(p.numel());
  }
  return parts[0].graph().record(OpKind::Concat, parts, Tensor::vector(std::move(values)), std::move(attrs));
}

Var slice(Var x, std::size_t offset, std::size_t length) {
  require_rank("slice", x, 1);
  if (offset + length > x.shape()[0]) {
    shape_error("slice", "range [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                             ") exceeds " + shape_to_string(x.shape()));
  }
  auto src = x.value().data().subspan(offset, length);
  NodeAttrs attrs;
  attrs.offset = offset;
  return x.graph().record(OpKind::Slice, {x}, Tensor::vector({src.begin(), src.end()}), std::move(attrs));
}

Var pad(Var x, std::size_t offset, std::size_t total) {
  require_rank("pad", x, 1);
  if (offset + x.shape()[0] > total) shape_error("pad", shape_to_string(x.shape()) + " does not fit");
  Tensor out(Shape{total});
  std::copy(x.value().data().begin(), x.value().data().end(),
            out.data().begin() + static_cast<std::ptrdiff_t>(offset));
  NodeAttrs attrs;
  attrs.offset = offset;
  attrs.extent = total;
  return x.graph().record(OpKind::Pad, {x}, std::move(out), std::move(attrs));
}

Var matmul(Var a, Var b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  if (a.shape()[1] != b.shape()[0]) shape_mismatch("matmul", a.shape(), b.shape());
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor out(Shape{m, n});
  kernels::matmul(m, k, n, a.value().data(), b.value().data(), out.data());
  return a.graph().record(OpKind::MatMul, {a, b}, std::move(out));
}

Var transpose(Var x) {
  require_rank("transpose", x, 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  Tensor out(Shape{cols, rows});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = x.value()[r * cols + c];
  }
  return x.graph().record(OpKind::Transpose, {x}, std::move(out));
}

Var reshape(Var x, const Shape& shape) {
  if (shape_numel(shape) != x.numel()) shape_mismatch("reshape", x.shape(), shape);
  return x.graph().record(OpKind::Reshape, {x}, Tensor(shape, x.value().values()));
}

Var softmax(Var logits) {
  require_rank("softmax", logits, 1);
  const Tensor& z = logits.value();
  if (z.numel() == 0) shape_error("softmax", "empty operand");
  const double top = *std::max_element(z.data().begin(), z.data().end());
  Tensor out = map(z, [top](double v) { return std::exp(v - top); });
  const double total = out.sum();
  for (double& v : out.data()) v /= total;
  return logits.graph().record(OpKind::Softmax, {logits}, std::move(out));
}

Var select(Var x, std::size_t i) { return reshape(slice(x, i, 1), Shape{}); }

Var dropout(Var x, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw Error("dropout: rate must be in [0, 1)");
  if (rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const double kept = 1.0 / (1.0 - rate);
  Tensor mask(x.shape());
  for (double& m : mask.data()) m = keep(rng) ? kept : 0.0;
  return mul(x, x.graph().constant(std::move(mask)));
}

}  // namespace attriprior::ad
