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

// Architecture strings: the derivation tree rendered as nested operation
// calls, e.g. `routing[im2col(3,2,1), computation<linear(128)>, col2im]`,
// optionally annotated with each operation's output shape.

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "snas/compiler.hpp"
#include "snas/error.hpp"
#include "snas/grammar.hpp"

namespace snas {

enum class EncodingVariant : std::uint8_t { Plain, WithShapes };

struct ArchString {
  std::string text;
  EncodingVariant variant = EncodingVariant::Plain;
};

namespace detail {

inline std::string render_op(const ResolvedOp& op) {
  std::string s(op_name(op.kind));
  if (!op.params.empty()) {
    s += '(';
    for (std::size_t i = 0; i < op.params.size(); ++i) {
      if (i != 0) s += ',';
      s += to_string(op.params[i].second);
    }
    s += ')';
  }
  if (is_computation(op.kind)) return "computation<" + s + ">";
  return s;
}

inline std::string render_shape(const TensorShape& shape) {
  std::string s = " {'out_feature_shape': [";
  for (std::size_t i = 0; i < shape.dims.size(); ++i) {
    if (i != 0) s += ", ";
    s += std::to_string(shape.dims[i]);
  }
  return s + "]}";
}

// `shapes` (when non-null) lists output shapes of operation tokens in
// rendering order; `next` walks it.
inline void render(const Grammar& g, const DerivationTree& node, std::string& out,
                   const std::vector<TensorShape>* shapes, std::size_t& next) {
  const Production& p = g.production_of(node);
  const auto symbols = resolve(p, node);
  auto emit_op = [&](const ResolvedOp& op) {
    out += render_op(op);
    if (shapes != nullptr) out += render_shape(shapes->at(next++));
  };
  if (!p.is_composite()) {
    emit_op(std::get<ResolvedOp>(symbols.front()));
    return;
  }
  out += render_op(std::get<ResolvedOp>(symbols.front()));
  out += '[';
  for (std::size_t i = 1; i < symbols.size(); ++i) {
    if (i != 1) out += ", ";
    if (const auto* op = std::get_if<ResolvedOp>(&symbols[i])) {
      emit_op(*op);
    } else {
      render(g, node.children.at(std::get<ChildSlot>(symbols[i]).index), out, shapes, next);
    }
  }
  out += ']';
}

}  // namespace detail

/// Canonical string of a tree: composite productions render as
/// `head[member, member, ...]`, computation operations as
/// `computation<op(args)>`, other operations as `op(args)` or bare `op`.
inline ArchString encode_plain(const Grammar& g, const DerivationTree& t) {
  ArchString s{{}, EncodingVariant::Plain};
  std::size_t next = 0;
  detail::render(g, t, s.text, nullptr, next);
  return s;
}

/// Plain encoding with ` {'out_feature_shape': [...]}` after every
/// operation token. Throws ShapeError if the tree does not compile.
inline ArchString encode_with_shapes(const Grammar& g, const DerivationTree& t,
                                     const TensorShape& input_shape) {
  const ArchGraph graph = compile(g, t, input_shape);
  std::vector<TensorShape> shapes;
  for (const auto& n : graph.nodes) {
    if (n.role == NodeRole::Op) shapes.push_back(n.out_shape);
  }
  ArchString s{{}, EncodingVariant::WithShapes};
  std::size_t next = 0;
  detail::render(g, t, s.text, &shapes, next);
  return s;
}

/// Removes every ` {...}` annotation.
inline std::string strip_annotations(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{') {
      int depth = 1;
      while (depth > 0 && ++i < text.size()) {
        if (text[i] == '{') ++depth;
        if (text[i] == '}') --depth;
      }
      while (!out.empty() && out.back() == ' ') out.pop_back();
      continue;
    }
    out += text[i];
  }
  return out;
}

namespace detail {

struct ArgNode {
  ParamValue value;
  std::size_t pos;
};

struct ExprNode {
  std::string name;
  bool computation = false;
  std::vector<ArgNode> args;
  bool has_body = false;
  std::vector<ExprNode> body;
  std::size_t pos = 0;
};

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  ExprNode parse() {
    ExprNode root = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { fail_at(what, pos_); }
  [[noreturn]] void fail_at(const std::string& what, std::size_t pos) const {
    throw ParseError("architecture string: " + what, 1, pos + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::string ident() {
    skip_ws();
    const std::size_t start = pos_;
    auto word = [](char ch) {
      return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
    };
    if (pos_ >= text_.size() || !(std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      fail("expected an operation name");
    }
    while (pos_ < text_.size() && word(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  ArgNode arg() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-')) {
      std::size_t end = pos_ + 1;
      while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
      const std::string digits(text_.substr(pos_, end - pos_));
      if (digits == "-") fail("expected an argument");
      if (end < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
        fail("malformed integer argument");
      }
      pos_ = end;
      try {
        return {std::int64_t{std::stoll(digits)}, start};
      } catch (const std::out_of_range&) {
        fail_at("integer argument out of range", start);
      }
    }
    return {ident(), start};
  }

  void annotation() {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != '{') return;
    int depth = 0;
    const std::size_t start = pos_;
    for (; pos_ < text_.size(); ++pos_) {
      if (text_[pos_] == '{') ++depth;
      if (text_[pos_] == '}' && --depth == 0) {
        ++pos_;
        return;
      }
    }
    fail_at("unterminated annotation", start);
  }

  void call(ExprNode& node) {
    node.name = ident();
    if (!parse_op_kind(node.name)) {
      throw UnknownOpError("architecture string: unknown operation '" + node.name + "'", 1,
                           node.pos + 1);
    }
    if (accept('(')) {
      node.args.push_back(arg());
      while (accept(',')) node.args.push_back(arg());
      expect(')');
    }
  }

  ExprNode expr() {
    skip_ws();
    ExprNode node;
    node.pos = pos_;
    const std::size_t save = pos_;
    if (text_.substr(pos_).starts_with("computation")) {
      pos_ += std::string_view("computation").size();
      if (accept('<')) {
        node.computation = true;
        node.pos = pos_;
        skip_ws();
        node.pos = pos_;
        call(node);
        expect('>');
        annotation();
        return node;
      }
      pos_ = save;
    }
    call(node);
    annotation();
    if (accept('[')) {
      node.has_body = true;
      node.body.push_back(expr());
      while (accept(',')) node.body.push_back(expr());
      expect(']');
      annotation();
    }
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// Matches the expression tree against productions, top-down. A failed match
// reports the furthest position reached across all alternatives.
class TreeMatcher {
 public:
  explicit TreeMatcher(const Grammar& g) : grammar_(g) {}

  DerivationTree match_nonterminal(const std::string& nt, const ExprNode& e) {
    std::optional<ParseError> best;
    for (const Production& p : grammar_.productions(nt)) {
      try {
        return match_production(nt, p, e);
      } catch (const ParseError& err) {
        if (!best || err.column() > best->column()) best = err;
      }
    }
    throw *best;
  }

 private:
  using Bindings = std::vector<std::optional<ParamValue>>;

  [[noreturn]] static void fail(const std::string& what, std::size_t pos) {
    throw ParseError("architecture string: " + what, 1, pos + 1);
  }

  DerivationTree match_production(const std::string& nt, const Production& p, const ExprNode& e) {
    Bindings bound(p.param_domains.size());
    DerivationTree node{nt, p.name, {}, {}};
    if (!p.is_composite()) {
      match_op(p, std::get<OpSpec>(p.rhs.front()), e, bound);
    } else {
      match_call(p, p.head(), e, bound);
      if (!e.has_body) fail("'" + e.name + "' needs a bracketed body", e.pos);
      if (e.body.size() != p.rhs.size() - 1) {
        fail("'" + e.name + "' of " + nt + "." + p.name + " expects " +
                 std::to_string(p.rhs.size() - 1) + " members, got " + std::to_string(e.body.size()),
             e.pos);
      }
      for (std::size_t i = 1; i < p.rhs.size(); ++i) {
        const ExprNode& member = e.body[i - 1];
        if (const auto* ref = std::get_if<NonterminalRef>(&p.rhs[i])) {
          node.children.push_back(match_nonterminal(ref->name, member));
        } else {
          match_op(p, std::get<OpSpec>(p.rhs[i]), member, bound);
        }
      }
    }
    for (std::size_t i = 0; i < bound.size(); ++i) {
      node.params.emplace_back(p.param_domains[i].first, *bound[i]);
    }
    return node;
  }

  void match_op(const Production& p, const OpSpec& spec, const ExprNode& e, Bindings& bound) {
    if (e.has_body) fail("operation '" + e.name + "' takes no body", e.pos);
    match_call(p, spec, e, bound);
  }

  void match_call(const Production& p, const OpSpec& spec, const ExprNode& e, Bindings& bound) {
    if (e.name != op_name(spec.kind)) {
      fail("expected '" + std::string(op_name(spec.kind)) + "', got '" + e.name + "'", e.pos);
    }
    if (e.computation != is_computation(spec.kind)) {
      fail(is_computation(spec.kind) ? "'" + e.name + "' must be wrapped in computation<...>"
                                     : "'" + e.name + "' is not a computation",
           e.pos);
    }
    if (e.args.size() != spec.args.size()) {
      fail("'" + e.name + "' expects " + std::to_string(spec.args.size()) + " argument(s)", e.pos);
    }
    for (std::size_t i = 0; i < spec.args.size(); ++i) {
      const OpArg& a = spec.args[i];
      const ArgNode& got = e.args[i];
      if (!a.binding) {
        if (got.value != a.literal) fail("argument must be " + to_string(a.literal), got.pos);
        continue;
      }
      std::size_t slot = 0;
      while (p.param_domains[slot].first != *a.binding) ++slot;
      const auto& domain = p.param_domains[slot].second;
      const bool want_int = std::holds_alternative<std::int64_t>(domain.front());
      if (want_int && !std::holds_alternative<std::int64_t>(got.value)) {
        fail("expected integer argument for '" + a.name + "', got '" + to_string(got.value) + "'",
             got.pos);
      }
      if (std::find(domain.begin(), domain.end(), got.value) == domain.end()) {
        fail("value " + to_string(got.value) + " outside the domain of '" + a.name + "'", got.pos);
      }
      if (bound[slot] && *bound[slot] != got.value) {
        fail("inconsistent value for parameter '" + *a.binding + "'", got.pos);
      }
      bound[slot] = got.value;
    }
  }

  const Grammar& grammar_;
};

}  // namespace detail

/// Inverse of encode_plain. Shape annotations are accepted and ignored.
/// Throws UnknownOpError for unknown operation names and ParseError (with
/// the 1-based column) for everything else.
inline DerivationTree parse(const Grammar& g, std::string_view text) {
  const detail::ExprNode root = detail::ExprParser(text).parse();
  return detail::TreeMatcher(g).match_nonterminal(g.start(), root);
}

}  // namespace snas
