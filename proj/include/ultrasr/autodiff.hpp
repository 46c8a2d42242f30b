#pragma once

// Reverse-mode differentiation over dense tensors.
//
// A Graph records every operation applied to its values. Graphs are built
// fresh for each forward pass and discarded afterwards; nothing persists
// across training steps. Node values never change once recorded, so ops are
// pure: identical inputs give bit-identical outputs.

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ultrasr/tensor.hpp"

namespace ultrasr::ad {

enum class OpKind {
  constant,
  parameter,
  add,
  sub,
  multiply,
  matmul,
  conv2d3x3,
  relu,
  sin,
  cos,
  abs,
  scalar_multiply,
  concat,
  slice,
  mean,
  sum,
  reshape,
  unfold3x3,
  gather_columns,
  periodic_encode,
  sum_groups,
};

std::string_view op_name(OpKind kind);

template <typename T>
class Graph;

// Lightweight handle to a node of a Graph.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
};

template <typename T>
using GradMap = std::map<std::string, Tensor<T>>;

template <typename T>
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> constant(Tensor<T> value);
  // Named leaf whose gradient is reported by backward().
  Var<T> parameter(std::string name, Tensor<T> value);

  const Tensor<T>& value(std::size_t id) const { return nodes_[id].value; }
  OpKind kind(std::size_t id) const { return nodes_[id].kind; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const std::vector<std::size_t>& parents(std::size_t id) const {
    return nodes_[id].parents;
  }
  std::size_t size() const { return nodes_.size(); }

  // Accumulated gradient; zeros of the value's shape when nothing has flowed.
  Tensor<T> grad(std::size_t id) const;

  // Gradients of a scalar root with respect to every named parameter.
  // Clears previously accumulated gradients first.
  GradMap<T> backward(Var<T> root);

  // Used by op implementations.
  Var<T> record(OpKind kind, Tensor<T> value, std::vector<std::size_t> parents,
                Backward backward);
  Tensor<T>& grad_buffer(std::size_t id);

 private:
  struct Node {
    OpKind kind;
    Tensor<T> value;
    Tensor<T> grad;  // allocated on first accumulation
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    Backward backward;
    std::string name;
  };
  std::deque<Node> nodes_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return graph->value(id);
}

// Elementwise with broadcasting of b: same shape, scalar, row vector [n]
// over [m, n], or column [m, 1] over [m, n].
template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> multiply(Var<T> a, Var<T> b);

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

// x [cin, h, w], weight [cout, cin, 3, 3], optional bias [cout].
template <typename T>
Var<T> conv2d3x3(Var<T> x, Var<T> weight);
template <typename T>
Var<T> conv2d3x3(Var<T> x, Var<T> weight, Var<T> bias);

template <typename T>
Var<T> relu(Var<T> a);
template <typename T>
Var<T> sin(Var<T> a);
template <typename T>
Var<T> cos(Var<T> a);
template <typename T>
Var<T> abs(Var<T> a);
template <typename T>
Var<T> scalar_multiply(Var<T> a, double s);

// Concatenation / slicing along the last axis.
template <typename T>
Var<T> concat(std::span<const Var<T>> parts);
template <typename T>
Var<T> concat(std::initializer_list<Var<T>> parts) {
  const std::vector<Var<T>> v(parts);
  return concat<T>(std::span<const Var<T>>(v));
}
template <typename T>
Var<T> slice(Var<T> a, std::size_t begin, std::size_t end);

template <typename T>
Var<T> mean(Var<T> a);
template <typename T>
Var<T> sum(Var<T> a);

template <typename T>
Var<T> reshape(Var<T> a, Shape shape);

// [c, h, w] -> [9c, h, w], zero-padded neighborhoods.
template <typename T>
Var<T> unfold3x3(Var<T> x);

// table [c, ...] viewed as [c, positions]; returns [index.size(), c].
template <typename T>
Var<T> gather_columns(Var<T> table, std::vector<std::int64_t> index);

// delta [n, 2], freqs [f] -> [n, 4f]; axis-major, frequency-minor, sin first.
template <typename T>
Var<T> periodic_encode(Var<T> delta, Var<T> freqs);

// x [n, c] -> [n / group, c], summing consecutive runs of `group` rows.
template <typename T>
Var<T> sum_groups(Var<T> x, std::size_t group);

// Uniform entry point keyed by op kind. Attributes are used by slice
// (begin, end), scalar_multiply (scalar), sum_groups (group) and reshape.
struct OpAttrs {
  double scalar = 1.0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t group = 1;
  Shape shape;
};

template <typename T>
Var<T> eval_op(OpKind kind, std::span<const Var<T>> inputs,
               const OpAttrs& attrs = {});

}  // namespace ultrasr::ad
