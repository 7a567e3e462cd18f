#pragma once

// Tape-based reverse-mode differentiation over dense double tensors.
//
// A Graph records every operation in insertion order; since parents are always
// recorded before children, reverse insertion order is a valid topological
// order for the backward sweep. A Graph and the Vars it hands out belong to a
// single thread.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hybridflow/tensor.hpp"

namespace hybridflow::ad {

/// Trainable tensor living outside any graph.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;  ///< Overwritten by Graph::backward when the parameter is bound.

  void zero_grad() { grad.fill(0.0); }
};

class Graph;

/// Handle to a node in a Graph.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::span<const double> grad() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Graph& graph() const noexcept { return *graph_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf without gradient.
  Var constant(Tensor value);
  /// Leaf that receives a gradient (readable through Var::grad after backward).
  Var variable(Tensor value);
  /// Leaf bound to an external parameter. Binding the same parameter twice
  /// returns the same node, so repeated uses accumulate into one adjoint.
  Var param(Parameter& p);

  /// Reverse sweep from a scalar loss. All adjoints are reset first, so
  /// calling backward twice yields the same gradients, not doubled ones.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

  // Op-author interface.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward);
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  /// Output adjoint of a node during the backward sweep.
  std::span<const double> adjoint(std::size_t id) const { return nodes_[id].grad; }
  /// Adjoint buffer of a parent, or an empty span if it needs no gradient.
  std::span<double> adjoint_sink(std::size_t id);
  std::size_t parent(std::size_t id, std::size_t k) const { return nodes_[id].parents[k]; }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Var leaf(Tensor value, bool requires_grad, Parameter* param);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
};

enum class ElementwiseOp { Sigmoid, Tanh, Relu, Add, Mul };

// Elementwise.
Var sigmoid(Var x);
Var tanh(Var x);
/// relu'(0) is taken as 0.
Var relu(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var elementwise(ElementwiseOp op, std::span<const Var> args);

/// [m x k] * [k x q] -> [m x q].
Var matmul(Var a, Var b);

/// Adds bias[c] to every element whose leading index is c.
Var add_bias(Var x, Var bias);

Var sum(Var x);
Var mean(Var x);

Var concat(std::span<const Var> parts, std::size_t axis);
/// Half-open range [begin, end) along `axis`.
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var x, Shape shape);

/// Left zero-padding used by conv1d_same for kernel width k.
constexpr std::size_t same_left_pad(std::size_t k) { return (k - 1) / 2; }

/// Same-length cross-correlation along the position axis.
///
/// signal [c_in x len] or [c_in x len x m], kernels [c_out x c_in x k],
/// bias [c_out]. The optional trailing axis holds m independent signals that
/// share kernels. Padding is floor((k-1)/2) zeros on the left and
/// ceil((k-1)/2) on the right, so the output length equals len.
Var conv1d_same(Var signal, Var kernels, Var bias);

/// Regroups a time-major batch [rows x steps*batch] (column t*batch + b holds
/// step t of sample b) into per-sample feature columns [rows*steps x batch],
/// where feature r*steps + t is the row-major flattening of that sample.
Var flatten_time_major(Var x, std::size_t steps);

/// Plain-tensor matmul, shared with code that needs no graph.
Tensor matmul(const Tensor& a, const Tensor& b);

}  // namespace hybridflow::ad
