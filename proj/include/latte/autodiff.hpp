// Copyright 2026 The latte Authors
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

// Reverse-mode differentiation over whole matrices.
//
// A Graph records every operation as a node holding its forward value and a
// closure that pushes the node's gradient into its inputs. Nodes are appended
// in evaluation order, so walking them backwards is a valid topological order.
// Each Graph is single-use and owned by one thread.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "latte/tensor.hpp"

namespace latte {

class Graph;

/// Handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor2& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor2 value) { return push(std::move(value), {}); }

  Var parameter(const std::string& name, Tensor2 value) {
    Var v = push(std::move(value), {});
    params_.emplace(name, v.id);
    return v;
  }

  const Tensor2& value(Var v) const { return nodes_[v.id].value; }

  /// Gradient of the last backward() target with respect to v; zeros if unreached.
  Tensor2 grad(Var v) const {
    const Node& n = nodes_[v.id];
    return n.grad.empty() ? Tensor2(n.value.rows(), n.value.cols()) : n.grad;
  }

  std::map<std::string, Tensor2> parameter_grads() const {
    std::map<std::string, Tensor2> out;
    for (const auto& [name, id] : params_) out.emplace(name, grad(Var{nullptr, id}));
    return out;
  }

  void backward(Var loss) {
    const Tensor2& l = nodes_[loss.id].value;
    if (l.rows() != 1 || l.cols() != 1) {
      throw ShapeError(detail::concat("backward: loss must be scalar, got ", l.rows(), "x",
                                      l.cols()));
    }
    for (Node& n : nodes_) n.grad = Tensor2();
    nodes_[loss.id].grad = Tensor2(1, 1, 1.0);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty() || !n.backward) continue;
      n.backward(*this, n.grad);
    }
  }

  // Operation plumbing.
  using Backward = std::function<void(Graph&, const Tensor2& upstream)>;

  Var push(Tensor2 value, Backward backward) {
    nodes_.push_back(Node{std::move(value), Tensor2(), std::move(backward)});
    return Var{this, nodes_.size() - 1};
  }

  /// Adds `delta` into the gradient of node `id`.
  void accumulate(std::size_t id, const Tensor2& delta) {
    Tensor2& g = nodes_[id].grad;
    if (g.empty()) {
      g = delta;
      return;
    }
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
  }

  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor2 value;
    Tensor2 grad;
    Backward backward;
  };

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> params_;
};

inline const Tensor2& Var::value() const { return graph->value(*this); }

namespace ops {

namespace detail {

inline Graph& owner(Var a, Var b) {
  if (a.graph != b.graph) throw ShapeError("operands belong to different graphs");
  return *a.graph;
}

template <typename Fn>
Tensor2 map(const Tensor2& a, Fn fn) {
  Tensor2 out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i]);
  return out;
}

}  // namespace detail

/// x W^T + b; x is K x in, W is out x in, b is 1 x out.
inline Var linear(Var x, Var weight, Var bias) {
  Graph& g = detail::owner(x, weight);
  const Tensor2& b = bias.value();
  if (b.rows() != 1) throw ShapeError("linear: bias must be a row vector");
  Tensor2 y = dense_forward(weight.value(), b.values(), x.value());
  return g.push(std::move(y), [x, weight, bias](Graph& gr, const Tensor2& up) {
    gr.accumulate(x.id, matmul(up, weight.value()));
    gr.accumulate(weight.id, matmul_tn(up, x.value()));
    Tensor2 db(1, up.cols());
    for (std::size_t r = 0; r < up.rows(); ++r) {
      for (std::size_t c = 0; c < up.cols(); ++c) db[c] += up(r, c);
    }
    gr.accumulate(bias.id, db);
  });
}

inline Var relu(Var x) {
  return x.graph->push(latte::relu(x.value()), [x](Graph& gr, const Tensor2& up) {
    const Tensor2& in = x.value();
    Tensor2 d(up.rows(), up.cols());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = in[i] > 0.0 ? up[i] : 0.0;
    gr.accumulate(x.id, d);
  });
}

inline Var add(Var a, Var b) {
  Graph& g = detail::owner(a, b);
  latte::detail::require_same_shape(a.value(), b.value(), "add");
  Tensor2 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return g.push(std::move(out), [a, b](Graph& gr, const Tensor2& up) {
    gr.accumulate(a.id, up);
    gr.accumulate(b.id, up);
  });
}

inline Var sub(Var a, Var b) {
  Graph& g = detail::owner(a, b);
  latte::detail::require_same_shape(a.value(), b.value(), "sub");
  Tensor2 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return g.push(std::move(out), [a, b](Graph& gr, const Tensor2& up) {
    gr.accumulate(a.id, up);
    gr.accumulate(b.id, detail::map(up, [](double v) { return -v; }));
  });
}

inline Var mul(Var a, Var b) {
  Graph& g = detail::owner(a, b);
  latte::detail::require_same_shape(a.value(), b.value(), "mul");
  Tensor2 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return g.push(std::move(out), [a, b](Graph& gr, const Tensor2& up) {
    Tensor2 da(up.rows(), up.cols());
    Tensor2 db(up.rows(), up.cols());
    for (std::size_t i = 0; i < up.size(); ++i) {
      da[i] = up[i] * b.value()[i];
      db[i] = up[i] * a.value()[i];
    }
    gr.accumulate(a.id, da);
    gr.accumulate(b.id, db);
  });
}

/// a + c for a constant tensor c (no gradient flows into c).
inline Var add_constant(Var a, const Tensor2& c) {
  latte::detail::require_same_shape(a.value(), c, "add_constant");
  Tensor2 out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return a.graph->push(std::move(out),
                       [a](Graph& gr, const Tensor2& up) { gr.accumulate(a.id, up); });
}

inline Var add_scalar(Var a, double s) {
  return a.graph->push(detail::map(a.value(), [s](double v) { return v + s; }),
                       [a](Graph& gr, const Tensor2& up) { gr.accumulate(a.id, up); });
}

inline Var scale(Var a, double s) {
  return a.graph->push(detail::map(a.value(), [s](double v) { return v * s; }),
                       [a, s](Graph& gr, const Tensor2& up) {
                         gr.accumulate(a.id, detail::map(up, [s](double v) { return v * s; }));
                       });
}

inline Var exp(Var a) {
  Tensor2 out = detail::map(a.value(), [](double v) { return std::exp(v); });
  const std::size_t self = a.graph->node_count();
  return a.graph->push(std::move(out), [a, self](Graph& gr, const Tensor2& up) {
    const Tensor2& y = gr.value(Var{&gr, self});
    Tensor2 d(up.rows(), up.cols());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = up[i] * y[i];
    gr.accumulate(a.id, d);
  });
}

inline Var square(Var a) {
  return a.graph->push(detail::map(a.value(), [](double v) { return v * v; }),
                       [a](Graph& gr, const Tensor2& up) {
                         Tensor2 d(up.rows(), up.cols());
                         for (std::size_t i = 0; i < d.size(); ++i) {
                           d[i] = 2.0 * a.value()[i] * up[i];
                         }
                         gr.accumulate(a.id, d);
                       });
}

/// Columns [begin, begin + count) of a.
inline Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor2& in = a.value();
  if (begin + count > in.cols() || count == 0) throw ShapeError("slice_cols out of range");
  Tensor2 out(in.rows(), count);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = in(r, begin + c);
  }
  return a.graph->push(std::move(out), [a, begin, count](Graph& gr, const Tensor2& up) {
    const Tensor2& src = a.value();
    Tensor2 d(src.rows(), src.cols());
    for (std::size_t r = 0; r < up.rows(); ++r) {
      for (std::size_t c = 0; c < count; ++c) d(r, begin + c) = up(r, c);
    }
    gr.accumulate(a.id, d);
  });
}

/// log softmax(a / tau) over each contiguous group of `group` columns.
inline Var block_log_softmax(Var a, std::size_t group, double tau) {
  const Tensor2& in = a.value();
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  if (group == 0 || in.cols() % group != 0) {
    throw ShapeError("block_log_softmax: columns not a multiple of group");
  }
  Tensor2 out(in.rows(), in.cols());
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto src = in.row(r);
    auto dst = out.row(r);
    for (std::size_t b = 0; b < src.size(); b += group) {
      double top = src[b] / tau;
      for (std::size_t j = 1; j < group; ++j) top = std::max(top, src[b + j] / tau);
      double total = 0.0;
      for (std::size_t j = 0; j < group; ++j) total += std::exp(src[b + j] / tau - top);
      const double lse = top + std::log(total);
      for (std::size_t j = 0; j < group; ++j) dst[b + j] = src[b + j] / tau - lse;
    }
  }
  const std::size_t self = a.graph->node_count();
  return a.graph->push(std::move(out), [a, group, tau, self](Graph& gr, const Tensor2& up) {
    const Tensor2& logp = gr.value(Var{&gr, self});
    Tensor2 d(up.rows(), up.cols());
    for (std::size_t r = 0; r < up.rows(); ++r) {
      for (std::size_t b = 0; b < up.cols(); b += group) {
        double total = 0.0;
        for (std::size_t j = 0; j < group; ++j) total += up(r, b + j);
        for (std::size_t j = 0; j < group; ++j) {
          d(r, b + j) = (up(r, b + j) - std::exp(logp(r, b + j)) * total) / tau;
        }
      }
    }
    gr.accumulate(a.id, d);
  });
}

/// Sums each contiguous group of `group` columns: K x (D*group) -> K x D.
inline Var block_sum(Var a, std::size_t group) {
  const Tensor2& in = a.value();
  if (group == 0 || in.cols() % group != 0) throw ShapeError("block_sum: bad group");
  Tensor2 out(in.rows(), in.cols() / group);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    for (std::size_t c = 0; c < in.cols(); ++c) out(r, c / group) += in(r, c);
  }
  return a.graph->push(std::move(out), [a, group](Graph& gr, const Tensor2& up) {
    const Tensor2& src = a.value();
    Tensor2 d(src.rows(), src.cols());
    for (std::size_t r = 0; r < d.rows(); ++r) {
      for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) = up(r, c / group);
    }
    gr.accumulate(a.id, d);
  });
}

/// max(a, floor) elementwise; entries at or below the floor pass no gradient.
inline Var clamp_min(Var a, double floor) {
  return a.graph->push(detail::map(a.value(), [floor](double v) { return std::max(v, floor); }),
                       [a, floor](Graph& gr, const Tensor2& up) {
                         Tensor2 d(up.rows(), up.cols());
                         for (std::size_t i = 0; i < d.size(); ++i) {
                           d[i] = a.value()[i] > floor ? up[i] : 0.0;
                         }
                         gr.accumulate(a.id, d);
                       });
}

inline Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.graph->push(Tensor2(1, 1, total), [a](Graph& gr, const Tensor2& up) {
    gr.accumulate(a.id, Tensor2(a.rows(), a.cols(), up[0]));
  });
}

inline Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

}  // namespace ops

}  // namespace latte
