#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gkde/tensor.hpp"

namespace gkde {

// Reverse-mode autodiff over a single-writer tape.  Nodes are appended in forward
// order, so creation order is already a topological order and backward is one
// reverse sweep.  A Var is a cheap handle (tape pointer + node index).

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

enum class Op {
  leaf,
  matmul,
  add,       // same shape, or row broadcast (m x n) + (1 x n)
  sub,
  mul,       // elementwise, same shape
  exp,
  log,
  tanh,
  relu,
  scale,       // x * c
  add_scalar,  // x + c
  clip_min,    // max(x, c); zero gradient at and below the floor
  row_mean,    // (m x n) -> (m x 1)
  sum,         // any -> (1 x 1)
  pairwise_sqdist,  // (m x d) against a constant (n x d) -> (m x n)
};

namespace detail {
struct Node {
  Op op = Op::leaf;
  std::size_t a = 0;
  std::size_t b = 0;
  double c = 0.0;   // scalar payload: scale factor, offset, or clip floor
  Tensor value;
  Tensor aux;       // constant operand of pairwise_sqdist
  bool requires_grad = false;
};
}  // namespace detail

class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad = true) {
    detail::Node n;
    n.op = Op::leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
  }

  Var constant(Tensor value) { return leaf(std::move(value), false); }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  const detail::Node& node(std::size_t id) const { return nodes_[id]; }

  Var push(detail::Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
  }

 private:
  // Deque, not vector: references returned by node() (and Var::value()) must
  // stay valid while the caller keeps recording.  Deque never moves existing
  // elements on append.
  std::deque<detail::Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->node(id).value; }

namespace detail {

inline Node make_unary(Op op, Var x, Tensor value, double c = 0.0) {
  Node n;
  n.op = op;
  n.a = x.id;
  n.c = c;
  n.value = std::move(value);
  n.requires_grad = x.tape->node(x.id).requires_grad;
  return n;
}

inline Node make_binary(Op op, Var x, Var y, Tensor value) {
  require(x.tape == y.tape, "tape ops: operands recorded on different tapes");
  Node n;
  n.op = op;
  n.a = x.id;
  n.b = y.id;
  n.value = std::move(value);
  n.requires_grad =
      x.tape->node(x.id).requires_grad || y.tape->node(y.id).requires_grad;
  return n;
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  Tensor out = matmul(a.value(), b.value());
  return a.tape->push(detail::make_binary(Op::matmul, a, b, std::move(out)));
}

inline Var add(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out;
  if (x.same_shape(y)) {
    out = x;
    add_into(out, y);
  } else if (y.rows() == 1 && y.cols() == x.cols()) {
    out = x;
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) += y(0, c);
  } else {
    throw std::invalid_argument("add: shapes are neither equal nor row-broadcastable");
  }
  return a.tape->push(detail::make_binary(Op::add, a, b, std::move(out)));
}

inline Var sub(Var a, Var b) {
  require(a.value().same_shape(b.value()), "sub: shape mismatch");
  Tensor out = a.value();
  axpy_into(out, -1.0, b.value());
  return a.tape->push(detail::make_binary(Op::sub, a, b, std::move(out)));
}

inline Var mul(Var a, Var b) {
  require(a.value().same_shape(b.value()), "mul: shape mismatch");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape->push(detail::make_binary(Op::mul, a, b, std::move(out)));
}

inline Var exp(Var x) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
  return x.tape->push(detail::make_unary(Op::exp, x, std::move(out)));
}

inline Var log(Var x) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0)) {
      throw std::domain_error("log: input must be strictly positive");
    }
    out[i] = std::log(out[i]);
  }
  return x.tape->push(detail::make_unary(Op::log, x, std::move(out)));
}

inline Var tanh(Var x) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return x.tape->push(detail::make_unary(Op::tanh, x, std::move(out)));
}

inline Var relu(Var x) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  return x.tape->push(detail::make_unary(Op::relu, x, std::move(out)));
}

inline Var scale(Var x, double c) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
  return x.tape->push(detail::make_unary(Op::scale, x, std::move(out), c));
}

inline Var add_scalar(Var x, double c) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
  return x.tape->push(detail::make_unary(Op::add_scalar, x, std::move(out), c));
}

inline Var clip_min(Var x, double floor) {
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > floor ? out[i] : floor;
  return x.tape->push(detail::make_unary(Op::clip_min, x, std::move(out), floor));
}

inline Var row_mean(Var x) {
  const Tensor& v = x.value();
  require(v.cols() >= 1, "row_mean: empty rows");
  Tensor out(v.rows(), 1);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    out(r, 0) = pairwise_sum(v.row_span(r)) / static_cast<double>(v.cols());
  }
  return x.tape->push(detail::make_unary(Op::row_mean, x, std::move(out)));
}

inline Var sum(Var x) {
  const Tensor& v = x.value();
  Tensor out = Tensor::scalar(pairwise_sum(v.data(), v.size()));
  return x.tape->push(detail::make_unary(Op::sum, x, std::move(out)));
}

// Squared Euclidean distance from every row of z to every row of the constant
// anchor matrix.  Gradient flows into z only; anchors are frozen targets.
inline Var pairwise_sqdist(Var z, Tensor anchors) {
  const Tensor& zv = z.value();
  require(zv.cols() == anchors.cols(),
          "pairwise_sqdist: embedding dim " + std::to_string(zv.cols()) +
              " vs anchor dim " + std::to_string(anchors.cols()));
  require(anchors.rows() >= 1, "pairwise_sqdist: empty anchor set");
  Tensor out(zv.rows(), anchors.rows());
  for (std::size_t b = 0; b < zv.rows(); ++b) {
    for (std::size_t i = 0; i < anchors.rows(); ++i) {
      out(b, i) = squared_distance(zv.row_span(b), anchors.row_span(i));
    }
  }
  detail::Node n = detail::make_unary(Op::pairwise_sqdist, z, std::move(out));
  n.aux = std::move(anchors);
  return z.tape->push(std::move(n));
}

// Adjoints of every node after a backward sweep, indexed by node id.
class GradientMap {
 public:
  explicit GradientMap(std::vector<Tensor> adjoints) : adjoints_(std::move(adjoints)) {}

  const Tensor& grad(Var v) const {
    if (v.id >= adjoints_.size() || adjoints_[v.id].empty()) {
      throw std::invalid_argument("GradientMap: no adjoint recorded for this node");
    }
    return adjoints_[v.id];
  }

 private:
  std::vector<Tensor> adjoints_;
};

inline GradientMap backward(Var root) {
  Tape& tape = *root.tape;
  const Tensor& rv = tape.node(root.id).value;
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw std::invalid_argument("backward: root must be a 1x1 scalar");
  }

  auto nodes = [&tape](std::size_t id) -> const detail::Node& {
    return tape.node(id);
  };

  std::vector<Tensor> adj(tape.size());
  auto ensure = [&](std::size_t id) -> Tensor& {
    if (adj[id].empty()) {
      const Tensor& v = nodes(id).value;
      adj[id] = Tensor(v.rows(), v.cols());
    }
    return adj[id];
  };
  ensure(root.id)(0, 0) = 1.0;

  // every parameter leaf gets an adjoint, zero-valued if nothing reaches it
  for (std::size_t idx = 0; idx <= root.id; ++idx) {
    if (nodes(idx).op == Op::leaf && nodes(idx).requires_grad) ensure(idx);
  }

  for (std::size_t idx = root.id + 1; idx-- > 0;) {
    const detail::Node& n = nodes(idx);
    if (!n.requires_grad || n.op == Op::leaf || adj[idx].empty()) continue;
    const Tensor& g = adj[idx];
    const Tensor& av = nodes(n.a).value;
    const bool need_a = nodes(n.a).requires_grad;

    switch (n.op) {
      case Op::matmul: {
        if (need_a) add_into(ensure(n.a), matmul(g, transpose(nodes(n.b).value)));
        if (nodes(n.b).requires_grad) add_into(ensure(n.b), matmul(transpose(av), g));
        break;
      }
      case Op::add: {
        if (need_a) add_into(ensure(n.a), g);
        if (nodes(n.b).requires_grad) {
          Tensor& gb = ensure(n.b);
          const Tensor& bv = nodes(n.b).value;
          if (bv.same_shape(g)) {
            add_into(gb, g);
          } else {  // bias row broadcast over batch rows
            for (std::size_t r = 0; r < g.rows(); ++r)
              for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
          }
        }
        break;
      }
      case Op::sub: {
        if (need_a) add_into(ensure(n.a), g);
        if (nodes(n.b).requires_grad) axpy_into(ensure(n.b), -1.0, g);
        break;
      }
      case Op::mul: {
        if (need_a) {
          Tensor& ga = ensure(n.a);
          const Tensor& bv = nodes(n.b).value;
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (nodes(n.b).requires_grad) {
          Tensor& gb = ensure(n.b);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
        break;
      }
      case Op::exp: {
        if (need_a) {
          Tensor& ga = ensure(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.value[i];
        }
        break;
      }
      case Op::log: {
        if (need_a) {
          Tensor& ga = ensure(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / av[i];
        }
        break;
      }
      case Op::tanh: {
        if (need_a) {
          Tensor& ga = ensure(n.a);
          for (std::size_t i = 0; i < g.size(); ++i)
            ga[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        }
        break;
      }
      case Op::relu: {
        if (need_a) {
          Tensor& ga = ensure(n.a);
          for (std::size_t i = 0; i < g.size(); ++i)
            ga[i] += av[i] > 0.0 ? g[i] : 0.0;
        }
        break;
      }
      case Op::scale: {
        if (need_a) axpy_into(ensure(n.a), n.c, g);
        break;
      }
      case Op::add_scalar: {
        if (need_a) add_into(ensure(n.a), g);
        break;
      }
      case Op::clip_min: {
        // hard stop at the floor: anchors clipped in log space contribute no gradient
        if (need_a) {
          Tensor& ga = ensure(n.a);
          for (std::size_t i = 0; i < g.size(); ++i)
            ga[i] += av[i] > n.c ? g[i] : 0.0;
        }
        break;
      }
      case Op::row_mean: {
        if (need_a) {
          Tensor& ga = ensure(n.a);
          const double inv = 1.0 / static_cast<double>(av.cols());
          for (std::size_t r = 0; r < av.rows(); ++r)
            for (std::size_t c = 0; c < av.cols(); ++c) ga(r, c) += g(r, 0) * inv;
        }
        break;
      }
      case Op::sum: {
        if (need_a) {
          Tensor& ga = ensure(n.a);
          const double gs = g(0, 0);
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gs;
        }
        break;
      }
      case Op::pairwise_sqdist: {
        if (need_a) {
          Tensor& ga = ensure(n.a);
          const Tensor& anchors = n.aux;
          for (std::size_t b = 0; b < av.rows(); ++b) {
            for (std::size_t i = 0; i < anchors.rows(); ++i) {
              const double gi = 2.0 * g(b, i);
              if (gi == 0.0) continue;
              for (std::size_t k = 0; k < av.cols(); ++k) {
                ga(b, k) += gi * (av(b, k) - anchors(i, k));
              }
            }
          }
        }
        break;
      }
      case Op::leaf:
        break;
    }
  }

  return GradientMap(std::move(adj));
}

}  // namespace gkde
