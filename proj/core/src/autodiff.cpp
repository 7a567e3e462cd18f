#include "hybridflow/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "hybridflow/errors.hpp"

namespace hybridflow::ad {

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

const Tensor& Var::value() const { return graph_->value(id_); }

std::span<const double> Var::grad() const { return graph_->adjoint(id_); }

Var Graph::leaf(Tensor value, bool requires_grad, Parameter* param) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.param = param;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) { return leaf(std::move(value), false, nullptr); }

Var Graph::variable(Tensor value) { return leaf(std::move(value), true, nullptr); }

Var Graph::param(Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  Var v = leaf(p.value, true, &p);
  bound_.emplace(&p, v.id());
  return v;
}

Var Graph::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
#ifndef NDEBUG
  bool finite_inputs = std::all_of(parents.begin(), parents.end(), [&](std::size_t id) {
    return nodes_[id].value.all_finite();
  });
  assert(!finite_inputs || value.all_finite());
#endif
  Node node;
  node.value = std::move(value);
  node.requires_grad = std::any_of(parents.begin(), parents.end(), [&](std::size_t id) {
    return nodes_[id].requires_grad;
  });
  if (node.requires_grad) node.backward = std::move(backward);
  node.parents = std::move(parents);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

std::span<double> Graph::adjoint_sink(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return {};
  return node.grad;
}

void Graph::backward(Var loss) {
  if (&loss.graph() != this) throw DimensionError("backward: loss belongs to another graph");
  const Node& root = nodes_[loss.id()];
  if (root.value.size() != 1)
    throw DimensionError("backward: loss must be scalar, got " +
                         shape_string(root.value.shape()));

  for (Node& node : nodes_) {
    if (node.requires_grad)
      node.grad.assign(node.value.size(), 0.0);
    else
      node.grad.clear();
  }
  if (!root.requires_grad) return;
  nodes_[loss.id()].grad[0] = 1.0;

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.requires_grad && node.backward) node.backward(*this, i);
  }
  for (Node& node : nodes_) {
    if (node.param != nullptr)
      node.param->grad = Tensor(node.value.shape(), node.grad);
  }
}

namespace {

void require_same_graph(Var a, Var b, const char* op) {
  if (&a.graph() != &b.graph())
    throw DimensionError(std::string(op) + ": operands belong to different graphs");
}

void require_same_shape(Var a, Var b, const char* op) {
  require_same_graph(a, b, op);
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
}

// y = f(x) elementwise, with dy/dx expressed through (x, y).
template <typename Forward, typename Derivative>
Var unary(Var x, Forward f, Derivative df) {
  Graph& g = x.graph();
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return g.record(std::move(out), {x.id()}, [df](Graph& g, std::size_t self) {
    const std::size_t px = g.parent(self, 0);
    auto dx = g.adjoint_sink(px);
    const auto gout = g.adjoint(self);
    const Tensor& xv = g.value(px);
    const Tensor& yv = g.value(self);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += gout[i] * df(xv[i], yv[i]);
  });
}

// (outer, extent, inner) decomposition around `axis`.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Var sigmoid(Var x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var scale(Var x, double factor) {
  return unary(
      x, [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return a.graph().record(std::move(out), {a.id(), b.id()}, [](Graph& g, std::size_t self) {
    const auto gout = g.adjoint(self);
    for (std::size_t k = 0; k < 2; ++k) {
      auto d = g.adjoint_sink(g.parent(self, k));
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += gout[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return a.graph().record(std::move(out), {a.id(), b.id()}, [](Graph& g, std::size_t self) {
    const auto gout = g.adjoint(self);
    auto da = g.adjoint_sink(g.parent(self, 0));
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += gout[i];
    auto db = g.adjoint_sink(g.parent(self, 1));
    for (std::size_t i = 0; i < db.size(); ++i) db[i] -= gout[i];
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.graph().record(std::move(out), {a.id(), b.id()}, [](Graph& g, std::size_t self) {
    const auto gout = g.adjoint(self);
    const std::size_t pa = g.parent(self, 0);
    const std::size_t pb = g.parent(self, 1);
    const Tensor& av = g.value(pa);
    const Tensor& bv = g.value(pb);
    auto da = g.adjoint_sink(pa);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += gout[i] * bv[i];
    auto db = g.adjoint_sink(pb);
    for (std::size_t i = 0; i < db.size(); ++i) db[i] += gout[i] * av[i];
  });
}

Var elementwise(ElementwiseOp op, std::span<const Var> args) {
  const bool binary = op == ElementwiseOp::Add || op == ElementwiseOp::Mul;
  if (args.size() != (binary ? 2u : 1u))
    throw DimensionError("elementwise: wrong operand count " + std::to_string(args.size()));
  switch (op) {
    case ElementwiseOp::Sigmoid: return sigmoid(args[0]);
    case ElementwiseOp::Tanh: return tanh(args[0]);
    case ElementwiseOp::Relu: return relu(args[0]);
    case ElementwiseOp::Add: return add(args[0], args[1]);
    case ElementwiseOp::Mul: return mul(args[0], args[1]);
  }
  throw DimensionError("elementwise: unknown op");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw DimensionError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), q = b.dim(1);
  Tensor out({m, q});
  for (std::size_t i = 0; i < m; ++i) {
    double* row = &out[i * q];
    for (std::size_t l = 0; l < k; ++l) {
      const double s = a[i * k + l];
      if (s == 0.0) continue;
      const double* brow = &b[l * q];
      for (std::size_t j = 0; j < q; ++j) row[j] += s * brow[j];
    }
  }
  return out;
}

Var matmul(Var a, Var b) {
  require_same_graph(a, b, "matmul");
  Tensor out = matmul(a.value(), b.value());
  return a.graph().record(std::move(out), {a.id(), b.id()}, [](Graph& g, std::size_t self) {
    const std::size_t pa = g.parent(self, 0);
    const std::size_t pb = g.parent(self, 1);
    const Tensor& av = g.value(pa);
    const Tensor& bv = g.value(pb);
    const auto gout = g.adjoint(self);
    const std::size_t m = av.dim(0), k = av.dim(1), q = bv.dim(1);
    // dA = G * B^T
    if (auto da = g.adjoint_sink(pa); !da.empty()) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &gout[i * q];
        for (std::size_t l = 0; l < k; ++l) {
          const double* brow = &bv[l * q];
          double acc = 0.0;
          for (std::size_t j = 0; j < q; ++j) acc += grow[j] * brow[j];
          da[i * k + l] += acc;
        }
      }
    }
    // dB = A^T * G
    if (auto db = g.adjoint_sink(pb); !db.empty()) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &gout[i * q];
        for (std::size_t l = 0; l < k; ++l) {
          const double s = av[i * k + l];
          double* drow = &db[l * q];
          for (std::size_t j = 0; j < q; ++j) drow[j] += s * grow[j];
        }
      }
    }
  });
}

Var add_bias(Var x, Var bias) {
  require_same_graph(x, bias, "add_bias");
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.rank() != 1 || xv.rank() < 1 || bv.dim(0) != xv.dim(0))
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) +
                         " does not match leading axis of " + shape_string(xv.shape()));
  const std::size_t lead = xv.dim(0);
  const std::size_t inner = xv.size() / lead;
  Tensor out(xv.shape());
  for (std::size_t c = 0; c < lead; ++c)
    for (std::size_t i = 0; i < inner; ++i) out[c * inner + i] = xv[c * inner + i] + bv[c];
  return x.graph().record(
      std::move(out), {x.id(), bias.id()}, [lead, inner](Graph& g, std::size_t self) {
        const auto gout = g.adjoint(self);
        auto dx = g.adjoint_sink(g.parent(self, 0));
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += gout[i];
        if (auto db = g.adjoint_sink(g.parent(self, 1)); !db.empty()) {
          for (std::size_t c = 0; c < lead; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < inner; ++i) acc += gout[c * inner + i];
            db[c] += acc;
          }
        }
      });
}

Var sum(Var x) {
  const Tensor& xv = x.value();
  double total = 0.0;
  for (double v : xv.data()) total += v;
  return x.graph().record(Tensor({1}, std::vector<double>{total}), {x.id()},
                          [](Graph& g, std::size_t self) {
                            const double gout = g.adjoint(self)[0];
                            auto dx = g.adjoint_sink(g.parent(self, 0));
                            for (double& d : dx) d += gout;
                          });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  const Shape& first = parts[0].shape();
  if (axis >= first.size())
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " +
                         shape_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> extents;
  for (const Var& p : parts) {
    require_same_graph(parts[0], p, "concat");
    const Shape& s = p.shape();
    bool compatible = s.size() == first.size();
    for (std::size_t i = 0; compatible && i < s.size(); ++i)
      if (i != axis && s[i] != first[i]) compatible = false;
    if (!compatible)
      throw DimensionError("concat: incompatible extents " + shape_string(first) + " and " +
                           shape_string(s) + " along axis " + std::to_string(axis));
    out_shape[axis] += s[axis];
    ids.push_back(p.id());
    extents.push_back(s[axis]);
  }
  const AxisSplit split = split_axis(out_shape, axis);
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    const std::size_t chunk = extents[k] * split.inner;
    for (std::size_t o = 0; o < split.outer; ++o)
      std::copy_n(&pv[o * chunk], chunk, &out[o * split.extent * split.inner + offset]);
    offset += chunk;
  }
  return parts[0].graph().record(
      std::move(out), ids, [split, extents](Graph& g, std::size_t self) {
        const auto gout = g.adjoint(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < extents.size(); ++k) {
          const std::size_t chunk = extents[k] * split.inner;
          if (auto d = g.adjoint_sink(g.parent(self, k)); !d.empty()) {
            for (std::size_t o = 0; o < split.outer; ++o) {
              const double* src = &gout[o * split.extent * split.inner + offset];
              double* dst = &d[o * chunk];
              for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
            }
          }
          offset += chunk;
        }
      });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& in_shape = x.shape();
  if (axis >= in_shape.size() || begin >= end || end > in_shape[axis])
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid on axis " + std::to_string(axis) + " of " +
                         shape_string(in_shape));
  const AxisSplit split = split_axis(in_shape, axis);
  Shape out_shape = in_shape;
  out_shape[axis] = end - begin;
  const std::size_t chunk = (end - begin) * split.inner;
  const std::size_t row = split.extent * split.inner;
  const std::size_t start = begin * split.inner;
  const Tensor& xv = x.value();
  Tensor out(out_shape);
  for (std::size_t o = 0; o < split.outer; ++o)
    std::copy_n(&xv[o * row + start], chunk, &out[o * chunk]);
  return x.graph().record(std::move(out), {x.id()},
                          [split, chunk, row, start](Graph& g, std::size_t self) {
                            const auto gout = g.adjoint(self);
                            auto dx = g.adjoint_sink(g.parent(self, 0));
                            for (std::size_t o = 0; o < split.outer; ++o)
                              for (std::size_t i = 0; i < chunk; ++i)
                                dx[o * row + start + i] += gout[o * chunk + i];
                          });
}

Var reshape(Var x, Shape shape) {
  if (shape_size(shape) != x.value().size())
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                         shape_string(shape));
  return x.graph().record(x.value().reshaped(std::move(shape)), {x.id()},
                          [](Graph& g, std::size_t self) {
                            const auto gout = g.adjoint(self);
                            auto dx = g.adjoint_sink(g.parent(self, 0));
                            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += gout[i];
                          });
}

Var flatten_time_major(Var x, std::size_t steps) {
  const Shape& s = x.shape();
  if (s.size() != 2 || steps == 0 || s[1] % steps != 0)
    throw DimensionError("flatten_time_major: " + shape_string(s) + " is not [rows x " +
                         std::to_string(steps) + "*batch]");
  // Row-major [rows][steps][batch] already is [rows*steps][batch].
  return reshape(x, {s[0] * steps, s[1] / steps});
}

Var conv1d_same(Var signal, Var kernels, Var bias) {
  require_same_graph(signal, kernels, "conv1d_same");
  require_same_graph(signal, bias, "conv1d_same");
  const Tensor& xv = signal.value();
  const Tensor& kv = kernels.value();
  const Tensor& bv = bias.value();
  if ((xv.rank() != 2 && xv.rank() != 3) || kv.rank() != 3 || bv.rank() != 1)
    throw DimensionError("conv1d_same: expected signal [c_in x len (x m)], kernels "
                         "[c_out x c_in x k], bias [c_out]; got " +
                         shape_string(xv.shape()) + ", " + shape_string(kv.shape()) + ", " +
                         shape_string(bv.shape()));
  const std::size_t c_in = xv.dim(0), len = xv.dim(1);
  const std::size_t m = xv.rank() == 3 ? xv.dim(2) : 1;
  const std::size_t c_out = kv.dim(0), k = kv.dim(2);
  if (kv.dim(1) != c_in || bv.dim(0) != c_out)
    throw DimensionError("conv1d_same: channel mismatch between signal " +
                         shape_string(xv.shape()) + ", kernels " + shape_string(kv.shape()) +
                         " and bias " + shape_string(bv.shape()));
  const std::size_t left = same_left_pad(k);
  if (k > len + (k - 1))
    throw UsageError("conv1d_same: kernel width " + std::to_string(k) +
                     " exceeds padded signal length");

  Shape out_shape = xv.rank() == 3 ? Shape{c_out, len, m} : Shape{c_out, len};
  Tensor out(out_shape);
  for (std::size_t o = 0; o < c_out; ++o) {
    for (std::size_t i = 0; i < len; ++i) {
      double* dst = &out[(o * len + i) * m];
      std::fill_n(dst, m, bv[o]);
      for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t u = 0; u < k; ++u) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(i + u) -
                                     static_cast<std::ptrdiff_t>(left);
          if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) continue;
          const double w = kv[(o * c_in + c) * k + u];
          const double* src = &xv[(c * len + static_cast<std::size_t>(pos)) * m];
          for (std::size_t j = 0; j < m; ++j) dst[j] += w * src[j];
        }
      }
    }
  }

  return signal.graph().record(
      std::move(out), {signal.id(), kernels.id(), bias.id()},
      [c_in, c_out, len, m, k, left](Graph& g, std::size_t self) {
        const std::size_t px = g.parent(self, 0);
        const std::size_t pk = g.parent(self, 1);
        const std::size_t pb = g.parent(self, 2);
        const Tensor& xv = g.value(px);
        const Tensor& kv = g.value(pk);
        const auto gout = g.adjoint(self);
        auto dx = g.adjoint_sink(px);
        auto dk = g.adjoint_sink(pk);
        auto db = g.adjoint_sink(pb);
        for (std::size_t o = 0; o < c_out; ++o) {
          for (std::size_t i = 0; i < len; ++i) {
            const double* go = &gout[(o * len + i) * m];
            if (!db.empty())
              for (std::size_t j = 0; j < m; ++j) db[o] += go[j];
            for (std::size_t c = 0; c < c_in; ++c) {
              for (std::size_t u = 0; u < k; ++u) {
                const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(i + u) -
                                           static_cast<std::ptrdiff_t>(left);
                if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) continue;
                const std::size_t base = (c * len + static_cast<std::size_t>(pos)) * m;
                const std::size_t widx = (o * c_in + c) * k + u;
                if (!dk.empty()) {
                  double acc = 0.0;
                  for (std::size_t j = 0; j < m; ++j) acc += go[j] * xv[base + j];
                  dk[widx] += acc;
                }
                if (!dx.empty()) {
                  const double w = kv[widx];
                  for (std::size_t j = 0; j < m; ++j) dx[base + j] += go[j] * w;
                }
              }
            }
          }
        }
      });
}

}  // namespace hybridflow::ad
