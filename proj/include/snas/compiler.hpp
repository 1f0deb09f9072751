// Copyright 2026 The snas Authors.
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

// Derivation tree -> operation DAG with tensor-shape inference.
//
// Graph layout contract: node 0 is the input marker, operation nodes follow
// in the left-to-right order their tokens appear in the architecture string,
// and the last node is the output marker. Edges are stored in creation
// order, so a node's in-edges list its operands in order.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "snas/error.hpp"
#include "snas/grammar.hpp"

namespace snas {

enum class Mode : std::uint8_t { Im, Col };

struct TensorShape {
  Mode mode = Mode::Im;
  std::vector<std::int64_t> dims;

  static TensorShape im(std::int64_t c, std::int64_t h, std::int64_t w) {
    return {Mode::Im, {c, h, w}};
  }
  static TensorShape col(std::int64_t s, std::int64_t d) { return {Mode::Col, {s, d}}; }

  bool valid() const {
    if (dims.size() != (mode == Mode::Im ? 3u : 2u)) return false;
    for (auto d : dims) {
      if (d < 1) return false;
    }
    return true;
  }

  std::string str() const {
    std::string s = mode == Mode::Im ? "Im(" : "Col(";
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (i != 0) s += ",";
      s += std::to_string(dims[i]);
    }
    return s + ")";
  }

  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

namespace detail {

inline std::int64_t required_int(OpKind kind, const ParamList& params, std::string_view name) {
  auto v = int_param(params, name);
  if (!v) {
    throw ShapeError(std::string(op_name(kind)) + ": missing integer parameter '" +
                     std::string(name) + "'");
  }
  return *v;
}

inline std::int64_t isqrt(std::int64_t n) {
  std::int64_t r = 0;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

inline void expect_arity(OpKind kind, std::size_t got, std::size_t want) {
  if (got != want) {
    throw ShapeError(std::string(op_name(kind)) + ": expects " + std::to_string(want) +
                     " input(s), got " + std::to_string(got));
  }
}

inline void expect_mode(OpKind kind, const TensorShape& s, Mode m) {
  if (s.mode != m) {
    throw ShapeError(std::string(op_name(kind)) + ": requires " + (m == Mode::Im ? "Im" : "Col") +
                     " mode input, got " + s.str());
  }
}

inline std::size_t dim_index(OpKind kind, const ParamList& params, const TensorShape& s) {
  const std::int64_t dim = required_int(kind, params, "dim");
  if (dim < 0 || static_cast<std::size_t>(dim) >= s.dims.size()) {
    throw ShapeError(std::string(op_name(kind)) + ": dim " + std::to_string(dim) +
                     " out of range for " + s.str());
  }
  return static_cast<std::size_t>(dim);
}

}  // namespace detail

/// Output shape of one operation. `dim` parameters index the shape's dims
/// (0-based, no batch axis). Fan-out operations return the shape of a
/// single copy/part.
inline TensorShape infer_shape(OpKind kind, const ParamList& params,
                               std::span<const TensorShape> inputs) {
  using detail::expect_arity;
  using detail::expect_mode;
  if (inputs.empty()) throw ShapeError(std::string(op_name(kind)) + ": no inputs");
  const TensorShape& in = inputs.front();
  switch (kind) {
    case OpKind::Sequential:
    case OpKind::Branching:
    case OpKind::Routing:
      throw ShapeError(std::string(op_name(kind)) + ": structural, not a graph operation");

    case OpKind::Im2col: {
      expect_arity(kind, inputs.size(), 1);
      expect_mode(kind, in, Mode::Im);
      const auto k = detail::required_int(kind, params, "k");
      const auto s = detail::required_int(kind, params, "s");
      const auto p = detail::required_int(kind, params, "p");
      if (k < 1 || s < 1 || p < 0) throw ShapeError("im2col: requires k>=1, s>=1, p>=0");
      const auto span_h = in.dims[1] + 2 * p - k;
      const auto span_w = in.dims[2] + 2 * p - k;
      if (span_h < 0 || span_w < 0) {
        throw ShapeError("im2col: kernel " + std::to_string(k) + " exceeds padded input " +
                         in.str() + " (non-positive output size)");
      }
      const auto h = span_h / s + 1;
      const auto w = span_w / s + 1;
      return TensorShape::col(h * w, in.dims[0] * k * k);
    }

    case OpKind::Col2im: {
      expect_arity(kind, inputs.size(), 1);
      expect_mode(kind, in, Mode::Col);
      const auto side = detail::isqrt(in.dims[0]);
      if (side * side != in.dims[0]) {
        throw ShapeError("col2im: S=" + std::to_string(in.dims[0]) + " is not a perfect square");
      }
      return TensorShape::im(in.dims[1], side, side);
    }

    case OpKind::Linear: {
      expect_arity(kind, inputs.size(), 1);
      expect_mode(kind, in, Mode::Col);
      const auto d = detail::required_int(kind, params, "d");
      if (d < 1) throw ShapeError("linear: output dimension must be positive");
      return TensorShape::col(in.dims[0], d);
    }

    case OpKind::Norm:
    case OpKind::Relu:
    case OpKind::Softmax:
    case OpKind::Identity:
    case OpKind::PosEnc:
      expect_arity(kind, inputs.size(), 1);
      return in;

    case OpKind::Permute: {
      expect_arity(kind, inputs.size(), 1);
      const ParamValue* o = find_param(params, "o");
      if (o == nullptr) throw ShapeError("permute: missing parameter 'o'");
      std::string order = to_string(*o);
      if (order.size() != in.dims.size()) {
        throw ShapeError("permute: order '" + order + "' does not match rank of " + in.str());
      }
      TensorShape out{in.mode, std::vector<std::int64_t>(in.dims.size(), 0)};
      std::vector<bool> seen(in.dims.size(), false);
      for (std::size_t i = 0; i < order.size(); ++i) {
        const int src = order[i] - '0';
        if (src < 0 || static_cast<std::size_t>(src) >= in.dims.size() || seen[src]) {
          throw ShapeError("permute: '" + order + "' is not a permutation");
        }
        seen[src] = true;
        out.dims[i] = in.dims[src];
      }
      return out;
    }

    case OpKind::Add: {
      for (const auto& s : inputs) {
        if (s != in) {
          throw ShapeError("add: requires equal shapes, got " + in.str() + " and " + s.str());
        }
      }
      return in;
    }

    case OpKind::Concat: {
      if (auto b = int_param(params, "b")) expect_arity(kind, inputs.size(), *b);
      const std::size_t dim = detail::dim_index(kind, params, in);
      TensorShape out = in;
      out.dims[dim] = 0;
      for (const auto& s : inputs) {
        if (s.mode != in.mode || s.dims.size() != in.dims.size()) {
          throw ShapeError("concat: mode mismatch " + in.str() + " vs " + s.str());
        }
        for (std::size_t i = 0; i < s.dims.size(); ++i) {
          if (i != dim && s.dims[i] != in.dims[i]) {
            throw ShapeError("concat: sizes differ off the concat dim: " + in.str() + " vs " +
                             s.str());
          }
        }
        out.dims[dim] += s.dims[dim];
      }
      return out;
    }

    case OpKind::Clone:
      expect_arity(kind, inputs.size(), 1);
      return in;

    case OpKind::Group: {
      expect_arity(kind, inputs.size(), 1);
      const auto b = detail::required_int(kind, params, "b");
      const std::size_t dim = detail::dim_index(kind, params, in);
      if (b < 1 || in.dims[dim] % b != 0) {
        throw ShapeError("group: size " + std::to_string(in.dims[dim]) + " not divisible by " +
                         std::to_string(b));
      }
      TensorShape out = in;
      out.dims[dim] /= b;
      return out;
    }

    case OpKind::DotProduct: {
      expect_arity(kind, inputs.size(), 2);
      expect_mode(kind, inputs[0], Mode::Col);
      if (inputs[1] != inputs[0]) {
        throw ShapeError("dot_product: requires equal Col shapes, got " + inputs[0].str() +
                         " and " + inputs[1].str());
      }
      return TensorShape::col(in.dims[0], in.dims[0]);
    }
  }
  throw ShapeError("unknown operation");
}

enum class NodeRole : std::uint8_t { Input, Op, Output };

struct GraphNode {
  std::size_t id = 0;
  NodeRole role = NodeRole::Op;
  OpKind kind = OpKind::Identity;  // meaningful for role == Op only
  ParamList params;
  TensorShape out_shape;
};

struct ArchGraph {
  std::vector<GraphNode> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t input_id = 0;
  std::size_t output_id = 0;

  std::vector<std::size_t> predecessors(std::size_t id) const {
    std::vector<std::size_t> out;
    for (const auto& [from, to] : edges) {
      if (to == id) out.push_back(from);
    }
    return out;
  }

  /// Adjacency lists in edge order.
  std::vector<std::vector<std::size_t>> successor_lists() const {
    std::vector<std::vector<std::size_t>> out(nodes.size());
    for (const auto& [from, to] : edges) out[from].push_back(to);
    return out;
  }
  std::vector<std::vector<std::size_t>> predecessor_lists() const {
    std::vector<std::vector<std::size_t>> out(nodes.size());
    for (const auto& [from, to] : edges) out[to].push_back(from);
    return out;
  }

  std::size_t op_count() const { return nodes.size() - 2; }
};

/// Kahn's algorithm, lowest id first. Throws ValidationError on a cycle.
inline std::vector<std::size_t> topological_order(const ArchGraph& g) {
  std::vector<std::size_t> indegree(g.nodes.size(), 0);
  for (const auto& e : g.edges) ++indegree[e.second];
  const auto succ = g.successor_lists();
  std::vector<std::size_t> ready;
  for (std::size_t i = g.nodes.size(); i-- > 0;) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::vector<std::size_t> order;
  order.reserve(g.nodes.size());
  while (!ready.empty()) {
    const std::size_t v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (std::size_t w : succ[v]) {
      if (--indegree[w] == 0) {
        ready.push_back(w);
        std::sort(ready.begin(), ready.end(), std::greater<>());
      }
    }
  }
  if (order.size() != g.nodes.size()) throw ValidationError("graph contains a cycle");
  return order;
}

/// Re-derives every node's shape from its operands in topological order and
/// checks the structural invariants. Throws on the first violation.
inline void verify_graph(const ArchGraph& g) {
  const auto preds = g.predecessor_lists();
  const auto succ = g.successor_lists();
  for (const auto& n : g.nodes) {
    const bool is_in = n.id == g.input_id;
    const bool is_out = n.id == g.output_id;
    if (preds[n.id].empty() != is_in) throw ValidationError("graph must have exactly one source");
    if (succ[n.id].empty() != is_out) throw ValidationError("graph must have exactly one sink");
    if (!n.out_shape.valid()) throw ValidationError("node " + std::to_string(n.id) + " has no shape");
  }
  for (std::size_t id : topological_order(g)) {
    const GraphNode& n = g.nodes[id];
    if (n.role == NodeRole::Input) continue;
    std::vector<TensorShape> ins;
    for (std::size_t p : preds[id]) ins.push_back(g.nodes[p].out_shape);
    const TensorShape expect = n.role == NodeRole::Output ? ins.at(0)
                                                          : infer_shape(n.kind, n.params, ins);
    if (expect != n.out_shape) {
      throw ValidationError("node " + std::to_string(id) + " shape " + n.out_shape.str() +
                            " != re-inferred " + expect.str());
    }
  }
}

namespace detail {

class GraphBuilder {
 public:
  GraphBuilder(const Grammar& g, const TensorShape& input) : grammar_(g) {
    graph_.nodes.push_back({0, NodeRole::Input, OpKind::Identity, {}, input});
  }

  ArchGraph finish(const DerivationTree& root) {
    const std::size_t last = emit(root, 0);
    const std::size_t out = graph_.nodes.size();
    graph_.nodes.push_back(
        {out, NodeRole::Output, OpKind::Identity, {}, graph_.nodes[last].out_shape});
    graph_.edges.emplace_back(last, out);
    graph_.input_id = 0;
    graph_.output_id = out;
    return std::move(graph_);
  }

 private:
  std::size_t emit(const DerivationTree& node, std::size_t prev) {
    const Production& p = grammar_.production_of(node);
    const auto symbols = resolve(p, node);
    if (!p.is_composite()) return add_op(std::get<ResolvedOp>(symbols.front()), {prev});

    const auto& head = std::get<ResolvedOp>(symbols.front());
    if (head.kind != OpKind::Branching) {
      std::size_t cur = prev;
      for (std::size_t i = 1; i < symbols.size(); ++i) cur = emit_member(node, symbols[i], cur);
      return cur;
    }

    const std::size_t branches = symbols.size() - 3;
    auto check_count = [&](const ParamList& params, std::string_view what) {
      if (auto b = int_param(params, "b"); b && *b != static_cast<std::int64_t>(branches)) {
        throw ShapeError(node.nonterminal + "." + node.production + ": " + std::string(what) +
                         " declares b=" + std::to_string(*b) + " but has " +
                         std::to_string(branches) + " branches");
      }
    };
    check_count(head.params, "branching");
    check_count(std::get<ResolvedOp>(symbols[1]).params, op_name(std::get<ResolvedOp>(symbols[1]).kind));
    const std::size_t fan = emit_member(node, symbols[1], prev);
    std::vector<std::size_t> ends;
    for (std::size_t i = 2; i + 1 < symbols.size(); ++i) {
      ends.push_back(emit_member(node, symbols[i], fan));
    }
    return add_op(std::get<ResolvedOp>(symbols.back()), ends);
  }

  std::size_t emit_member(const DerivationTree& node, const ResolvedSymbol& s, std::size_t prev) {
    if (const auto* op = std::get_if<ResolvedOp>(&s)) return add_op(*op, {prev});
    return emit(node.children.at(std::get<ChildSlot>(s).index), prev);
  }

  std::size_t add_op(const ResolvedOp& op, const std::vector<std::size_t>& inputs) {
    const std::size_t id = graph_.nodes.size();
    std::vector<TensorShape> shapes;
    shapes.reserve(inputs.size());
    for (std::size_t i : inputs) shapes.push_back(graph_.nodes[i].out_shape);
    TensorShape out;
    try {
      out = infer_shape(op.kind, op.params, shapes);
    } catch (const ShapeError& e) {
      throw ShapeError("node " + std::to_string(id) + " (" + std::string(op_name(op.kind)) +
                       "): " + e.what());
    }
    graph_.nodes.push_back({id, NodeRole::Op, op.kind, op.params, std::move(out)});
    for (std::size_t i : inputs) graph_.edges.emplace_back(i, id);
    return id;
  }

  const Grammar& grammar_;
  ArchGraph graph_;
};

}  // namespace detail

/// Compiles a derivation tree into a shape-checked operation graph.
/// Throws ShapeError naming the offending node when any operation rejects
/// its operand shapes; such architectures are invalid.
inline ArchGraph compile(const Grammar& g, const DerivationTree& t, const TensorShape& input_shape) {
  if (!input_shape.valid()) throw ShapeError("input shape " + input_shape.str() + " is invalid");
  return detail::GraphBuilder(g, input_shape).finish(t);
}

inline nlohmann::json to_json(const TensorShape& s) {
  return {{"mode", s.mode == Mode::Im ? "im" : "col"}, {"dims", s.dims}};
}

inline nlohmann::json to_json(const ArchGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : n.params) params[k] = to_json_value(v);
    const char* role = n.role == NodeRole::Input ? "input" : n.role == NodeRole::Output ? "output" : "op";
    nodes.push_back({{"id", n.id},
                     {"role", role},
                     {"kind", n.role == NodeRole::Op ? std::string(op_name(n.kind)) : std::string(role)},
                     {"params", params},
                     {"shape", to_json(n.out_shape)}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : g.edges) edges.push_back({a, b});
  return {{"nodes", nodes}, {"edges", edges}, {"input", g.input_id}, {"output", g.output_id}};
}

}  // namespace snas
