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

// Context-free grammar over neural-network operations, derivation trees,
// and the two search-space moves: uniform sampling and subtree mutation.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "snas/error.hpp"

namespace snas {

using Rng = std::mt19937_64;

inline constexpr std::size_t kDefaultMaxDepth = 12;
inline constexpr std::size_t kDefaultMutationRetries = 10;

enum class OpKind : std::uint8_t {
  Sequential,
  Branching,
  Clone,
  Group,
  Add,
  Concat,
  DotProduct,
  Routing,
  Im2col,
  Col2im,
  Permute,
  Identity,
  Linear,
  Norm,
  Relu,
  Softmax,
  PosEnc,
};

inline constexpr std::array<OpKind, 17> kAllOpKinds = {
    OpKind::Sequential, OpKind::Branching, OpKind::Clone,    OpKind::Group,
    OpKind::Add,        OpKind::Concat,    OpKind::DotProduct, OpKind::Routing,
    OpKind::Im2col,     OpKind::Col2im,    OpKind::Permute,  OpKind::Identity,
    OpKind::Linear,     OpKind::Norm,      OpKind::Relu,     OpKind::Softmax,
    OpKind::PosEnc};

inline std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Sequential: return "sequential";
    case OpKind::Branching: return "branching";
    case OpKind::Clone: return "clone";
    case OpKind::Group: return "group";
    case OpKind::Add: return "add";
    case OpKind::Concat: return "concat";
    case OpKind::DotProduct: return "dot_product";
    case OpKind::Routing: return "routing";
    case OpKind::Im2col: return "im2col";
    case OpKind::Col2im: return "col2im";
    case OpKind::Permute: return "permute";
    case OpKind::Identity: return "identity";
    case OpKind::Linear: return "linear";
    case OpKind::Norm: return "norm";
    case OpKind::Relu: return "relu";
    case OpKind::Softmax: return "softmax";
    case OpKind::PosEnc: return "pos_enc";
  }
  return "?";
}

inline std::optional<OpKind> parse_op_kind(std::string_view name) {
  for (OpKind k : kAllOpKinds) {
    if (op_name(k) == name) return k;
  }
  return std::nullopt;
}

/// Combinators that group other operations and never become graph nodes.
inline bool is_structural(OpKind k) {
  return k == OpKind::Sequential || k == OpKind::Branching || k == OpKind::Routing;
}
inline bool is_fanout(OpKind k) { return k == OpKind::Clone || k == OpKind::Group; }
inline bool is_aggregation(OpKind k) {
  return k == OpKind::Add || k == OpKind::Concat || k == OpKind::DotProduct;
}
/// Rendered as `computation<...>` in architecture strings.
inline bool is_computation(OpKind k) {
  return k == OpKind::Linear || k == OpKind::Norm || k == OpKind::Relu ||
         k == OpKind::Softmax || k == OpKind::PosEnc;
}

/// Parameter values are integers or enumeration labels.
using ParamValue = std::variant<std::int64_t, std::string>;

/// Ordered name/value pairs; order is the declaration order in the grammar.
using ParamList = std::vector<std::pair<std::string, ParamValue>>;

inline std::string to_string(const ParamValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

inline nlohmann::json to_json_value(const ParamValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::get<std::string>(v);
}

inline const ParamValue* find_param(const ParamList& params, std::string_view name) {
  for (const auto& [k, v] : params) {
    if (k == name) return &v;
  }
  return nullptr;
}

inline std::optional<std::int64_t> int_param(const ParamList& params, std::string_view name) {
  const ParamValue* v = find_param(params, name);
  if (v == nullptr) return std::nullopt;
  if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
  return std::nullopt;
}

/// One operation argument: either a literal or a `$name` reference into the
/// production's parameter domains.
struct OpArg {
  std::string name;
  std::optional<std::string> binding;
  ParamValue literal;

  friend bool operator==(const OpArg&, const OpArg&) = default;
};

struct OpSpec {
  OpKind kind = OpKind::Identity;
  std::vector<OpArg> args;

  friend bool operator==(const OpSpec&, const OpSpec&) = default;
};

struct NonterminalRef {
  std::string name;

  friend bool operator==(const NonterminalRef&, const NonterminalRef&) = default;
};

using Symbol = std::variant<OpSpec, NonterminalRef>;

struct Production {
  std::string name;
  std::vector<Symbol> rhs;
  std::vector<std::pair<std::string, std::vector<ParamValue>>> param_domains;

  /// Composite productions start with a structural head (sequential,
  /// branching, routing) followed by their members; all others are a single
  /// terminal operation.
  bool is_composite() const {
    const auto* op = rhs.empty() ? nullptr : std::get_if<OpSpec>(&rhs.front());
    return op != nullptr && is_structural(op->kind);
  }

  const OpSpec& head() const { return std::get<OpSpec>(rhs.front()); }

  std::size_t nonterminal_count() const {
    return static_cast<std::size_t>(std::count_if(rhs.begin(), rhs.end(), [](const Symbol& s) {
      return std::holds_alternative<NonterminalRef>(s);
    }));
  }

  const std::vector<ParamValue>* domain(std::string_view param) const {
    for (const auto& [k, values] : param_domains) {
      if (k == param) return &values;
    }
    return nullptr;
  }
};

/// A node of the derivation tree: which production expanded which
/// nonterminal, with its resolved parameters and one child per nonterminal
/// on the production's right-hand side.
struct DerivationTree {
  std::string nonterminal;
  std::string production;
  ParamList params;
  std::vector<DerivationTree> children;

  friend bool operator==(const DerivationTree&, const DerivationTree&) = default;

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& c : children) n += c.size();
    return n;
  }

  /// A single node has depth 1.
  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& c : children) d = std::max(d, c.depth());
    return d + 1;
  }
};

class Grammar {
 public:
  using Rules = std::map<std::string, std::vector<Production>>;

  static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

  Grammar(std::string start, Rules rules) : start_(std::move(start)), rules_(std::move(rules)) {
    validate();
    compute_min_depths();
  }

  const std::string& start() const { return start_; }
  const Rules& rules() const { return rules_; }

  const std::vector<Production>& productions(const std::string& nonterminal) const {
    auto it = rules_.find(nonterminal);
    if (it == rules_.end()) throw ValidationError("undefined nonterminal '" + nonterminal + "'");
    return it->second;
  }

  const Production& production(const std::string& nonterminal, const std::string& name) const {
    for (const auto& p : productions(nonterminal)) {
      if (p.name == name) return p;
    }
    throw ValidationError("nonterminal '" + nonterminal + "' has no production '" + name + "'");
  }

  const Production& production_of(const DerivationTree& node) const {
    return production(node.nonterminal, node.production);
  }

  /// Smallest tree depth any derivation of `nonterminal` can reach;
  /// kUnbounded when none is finite.
  std::size_t min_depth(const std::string& nonterminal) const {
    return nt_depth_.at(nonterminal);
  }

  std::size_t min_depth(const std::string& nonterminal, std::size_t production_index) const {
    return prod_depth_.at(nonterminal).at(production_index);
  }

 private:
  void validate() const {
    if (rules_.find(start_) == rules_.end()) {
      throw ValidationError("start symbol '" + start_ + "' has no rules");
    }
    for (const auto& [nt, prods] : rules_) {
      if (prods.empty()) throw ValidationError("nonterminal '" + nt + "' has an empty rule set");
      for (std::size_t i = 0; i < prods.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          if (prods[i].name == prods[j].name) {
            throw ValidationError("duplicate production '" + prods[i].name + "' in '" + nt + "'");
          }
        }
        validate_production(nt, prods[i]);
      }
    }
  }

  void validate_production(const std::string& nt, const Production& p) const {
    const std::string where = nt + "." + p.name;
    if (p.rhs.empty()) throw ValidationError(where + ": empty right-hand side");
    for (const auto& [name, values] : p.param_domains) {
      if (values.empty()) throw ValidationError(where + ": parameter '" + name + "' has an empty domain");
      const bool used = std::any_of(p.rhs.begin(), p.rhs.end(), [&](const Symbol& s) {
        const auto* op = std::get_if<OpSpec>(&s);
        return op != nullptr && std::any_of(op->args.begin(), op->args.end(), [&](const OpArg& a) {
                 return a.binding == name;
               });
      });
      if (!used) throw ValidationError(where + ": parameter '" + name + "' is never used");
    }
    for (const Symbol& s : p.rhs) {
      if (const auto* ref = std::get_if<NonterminalRef>(&s)) {
        if (rules_.find(ref->name) == rules_.end()) {
          throw ValidationError(where + ": undefined nonterminal '" + ref->name + "'");
        }
        continue;
      }
      for (const OpArg& arg : std::get<OpSpec>(s).args) {
        if (arg.binding && p.domain(*arg.binding) == nullptr) {
          throw ValidationError(where + ": unbound parameter '$" + *arg.binding + "'");
        }
      }
    }
    if (!p.is_composite()) {
      const auto* op = std::get_if<OpSpec>(&p.rhs.front());
      if (p.rhs.size() != 1 || op == nullptr) {
        throw ValidationError(where + ": expected a structural head or a single operation");
      }
      if (is_fanout(op->kind) || is_aggregation(op->kind)) {
        throw ValidationError(where + ": '" + std::string(op_name(op->kind)) +
                              "' may only appear inside a branching body");
      }
      return;
    }
    const OpKind head = p.head().kind;
    const std::size_t members = p.rhs.size() - 1;
    if (members == 0) throw ValidationError(where + ": structural production without members");
    for (std::size_t i = 1; i < p.rhs.size(); ++i) {
      const auto* op = std::get_if<OpSpec>(&p.rhs[i]);
      if (op == nullptr) continue;
      if (is_structural(op->kind)) {
        throw ValidationError(where + ": nested structural operation must be its own production");
      }
      const bool first = i == 1;
      const bool last = i + 1 == p.rhs.size();
      if (head == OpKind::Branching) {
        if (first && !is_fanout(op->kind)) {
          throw ValidationError(where + ": branching body must start with clone or group");
        }
        if (last && !is_aggregation(op->kind)) {
          throw ValidationError(where + ": branching body must end with an aggregation");
        }
        if (!first && !last && (is_fanout(op->kind) || is_aggregation(op->kind))) {
          throw ValidationError(where + ": branches must be single-input operations");
        }
      } else if (is_fanout(op->kind) || is_aggregation(op->kind)) {
        throw ValidationError(where + ": '" + std::string(op_name(op->kind)) +
                              "' may only appear inside a branching body");
      }
    }
    if (head == OpKind::Branching) {
      if (members < 3 || !std::holds_alternative<OpSpec>(p.rhs[1]) ||
          !std::holds_alternative<OpSpec>(p.rhs.back())) {
        throw ValidationError(where + ": branching needs fan-out, at least one branch, aggregation");
      }
    }
  }

  // Fixed-point iteration: a production's depth is one more than the deepest
  // minimal child.
  void compute_min_depths() {
    for (const auto& [nt, prods] : rules_) {
      nt_depth_[nt] = kUnbounded;
      prod_depth_[nt].assign(prods.size(), kUnbounded);
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [nt, prods] : rules_) {
        for (std::size_t i = 0; i < prods.size(); ++i) {
          std::size_t deepest = 0;
          for (const Symbol& s : prods[i].rhs) {
            if (const auto* ref = std::get_if<NonterminalRef>(&s)) {
              deepest = std::max(deepest, nt_depth_[ref->name]);
            }
          }
          const std::size_t d = deepest == kUnbounded ? kUnbounded : deepest + 1;
          if (d < prod_depth_[nt][i]) {
            prod_depth_[nt][i] = d;
            changed = true;
          }
          if (d < nt_depth_[nt]) {
            nt_depth_[nt] = d;
            changed = true;
          }
        }
      }
    }
  }

  std::string start_;
  Rules rules_;
  std::map<std::string, std::size_t> nt_depth_;
  std::map<std::string, std::vector<std::size_t>> prod_depth_;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline ParamValue param_value_from_json(const nlohmann::ordered_json& j, const std::string& where) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_string()) return j.get<std::string>();
  throw ValidationError(where + ": parameter values must be integers or strings");
}

inline OpSpec op_from_json(const nlohmann::ordered_json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ValidationError(where + ": op needs a string 'kind'");
  }
  const auto name = j["kind"].get<std::string>();
  auto kind = parse_op_kind(name);
  if (!kind) throw ValidationError(where + ": unknown op kind '" + name + "'");
  OpSpec op{*kind, {}};
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ValidationError(where + ": op params must be an object");
    for (const auto& [k, v] : j["params"].items()) {
      OpArg arg{k, std::nullopt, std::int64_t{0}};
      if (v.is_string() && !v.get<std::string>().empty() && v.get<std::string>().front() == '$') {
        arg.binding = v.get<std::string>().substr(1);
      } else {
        arg.literal = param_value_from_json(v, where + "." + k);
      }
      op.args.push_back(std::move(arg));
    }
  }
  return op;
}

}  // namespace detail

/// Parses and validates a grammar file (JSON). Syntax errors carry a line
/// and column; semantic violations raise ValidationError naming the symbol.
inline Grammar load_grammar(std::string_view text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
    auto [line, col] = detail::line_column(text, offset);
    throw ParseError(std::string("grammar: ") + e.what(), line, col);
  }
  if (!doc.is_object()) throw ValidationError("grammar: top level must be an object");
  if (!doc.contains("start") || !doc["start"].is_string()) {
    throw ValidationError("grammar: missing string field 'start'");
  }
  if (!doc.contains("rules") || !doc["rules"].is_object()) {
    throw ValidationError("grammar: missing object field 'rules'");
  }
  Grammar::Rules rules;
  for (const auto& [nt, prods] : doc["rules"].items()) {
    if (!prods.is_array()) throw ValidationError("grammar: rules." + nt + " must be an array");
    auto& out = rules[nt];
    for (const auto& pj : prods) {
      if (!pj.is_object() || !pj.contains("name") || !pj["name"].is_string()) {
        throw ValidationError("grammar: every production in " + nt + " needs a string 'name'");
      }
      Production p;
      p.name = pj["name"].get<std::string>();
      const std::string where = nt + "." + p.name;
      if (pj.contains("param_domains")) {
        if (!pj["param_domains"].is_object()) {
          throw ValidationError(where + ": param_domains must be an object");
        }
        for (const auto& [param, values] : pj["param_domains"].items()) {
          if (!values.is_array()) {
            throw ValidationError(where + ": domain of '" + param + "' must be a list");
          }
          std::vector<ParamValue> domain;
          for (const auto& v : values) domain.push_back(detail::param_value_from_json(v, where));
          p.param_domains.emplace_back(param, std::move(domain));
        }
      }
      if (!pj.contains("rhs") || !pj["rhs"].is_array()) {
        throw ValidationError(where + ": missing 'rhs' array");
      }
      for (const auto& sj : pj["rhs"]) {
        if (sj.is_object() && sj.contains("nt") && sj["nt"].is_string()) {
          p.rhs.emplace_back(NonterminalRef{sj["nt"].get<std::string>()});
        } else if (sj.is_object() && sj.contains("op")) {
          p.rhs.emplace_back(detail::op_from_json(sj["op"], where));
        } else {
          throw ValidationError(where + ": rhs symbols are {\"op\": ...} or {\"nt\": ...}");
        }
      }
      out.push_back(std::move(p));
    }
  }
  return Grammar(doc["start"].get<std::string>(), std::move(rules));
}

/// The operations of a production with `$name` arguments replaced by the
/// node's parameter values. Nonterminal slots are reported by child index.
struct ResolvedOp {
  OpKind kind;
  ParamList params;
};
struct ChildSlot {
  std::size_t index;
};
using ResolvedSymbol = std::variant<ResolvedOp, ChildSlot>;

inline ResolvedOp resolve_op(const OpSpec& spec, const ParamList& node_params) {
  ResolvedOp op{spec.kind, {}};
  for (const OpArg& arg : spec.args) {
    if (arg.binding) {
      const ParamValue* v = find_param(node_params, *arg.binding);
      if (v == nullptr) throw ValidationError("parameter '" + *arg.binding + "' is unresolved");
      op.params.emplace_back(arg.name, *v);
    } else {
      op.params.emplace_back(arg.name, arg.literal);
    }
  }
  return op;
}

inline std::vector<ResolvedSymbol> resolve(const Production& p, const DerivationTree& node) {
  std::vector<ResolvedSymbol> out;
  out.reserve(p.rhs.size());
  std::size_t child = 0;
  for (const Symbol& s : p.rhs) {
    if (std::holds_alternative<NonterminalRef>(s)) {
      out.emplace_back(ChildSlot{child++});
    } else {
      out.emplace_back(resolve_op(std::get<OpSpec>(s), node.params));
    }
  }
  return out;
}

/// Throws ValidationError unless `t` is a derivation of `t.nonterminal`
/// within `max_depth`.
inline void validate_tree(const Grammar& g, const DerivationTree& t, std::size_t max_depth) {
  if (t.depth() > max_depth) {
    throw ValidationError("tree depth " + std::to_string(t.depth()) + " exceeds " +
                          std::to_string(max_depth));
  }
  const Production& p = g.production_of(t);
  if (t.children.size() != p.nonterminal_count()) {
    throw ValidationError(t.nonterminal + "." + t.production + ": wrong number of children");
  }
  if (t.params.size() != p.param_domains.size()) {
    throw ValidationError(t.nonterminal + "." + t.production + ": wrong parameter count");
  }
  for (std::size_t i = 0; i < t.params.size(); ++i) {
    const auto& [name, domain] = p.param_domains[i];
    if (t.params[i].first != name ||
        std::find(domain.begin(), domain.end(), t.params[i].second) == domain.end()) {
      throw ValidationError(t.nonterminal + "." + t.production + ": parameter '" + name +
                            "' outside its domain");
    }
  }
  std::size_t child = 0;
  for (const Symbol& s : p.rhs) {
    if (const auto* ref = std::get_if<NonterminalRef>(&s)) {
      if (t.children[child].nonterminal != ref->name) {
        throw ValidationError(t.nonterminal + "." + t.production + ": child " +
                              std::to_string(child) + " must derive " + ref->name);
      }
      validate_tree(g, t.children[child], max_depth - 1);
      ++child;
    }
  }
}

namespace detail {

template <class T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
  return items[dist(rng)];
}

inline DerivationTree sample_nonterminal(const Grammar& g, const std::string& nt,
                                         std::size_t budget, Rng& rng) {
  const auto& prods = g.productions(nt);
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < prods.size(); ++i) {
    if (g.min_depth(nt, i) <= budget) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw SamplingExhausted("no production of '" + nt + "' terminates within depth " +
                            std::to_string(budget));
  }
  const Production& p = prods[pick(eligible, rng)];
  DerivationTree node{nt, p.name, {}, {}};
  for (const auto& [name, domain] : p.param_domains) {
    node.params.emplace_back(name, pick(domain, rng));
  }
  for (const Symbol& s : p.rhs) {
    if (const auto* ref = std::get_if<NonterminalRef>(&s)) {
      node.children.push_back(sample_nonterminal(g, ref->name, budget - 1, rng));
    }
  }
  return node;
}

// Preorder walk yielding (node, depth-from-root with root = 1).
template <class Tree, class F>
void for_each_preorder(Tree& t, F&& f, std::size_t depth = 1) {
  f(t, depth);
  for (auto& c : t.children) for_each_preorder(c, f, depth + 1);
}

}  // namespace detail

/// Samples a derivation of `nonterminal` (the start symbol by default) with
/// depth at most `max_depth`. Each step draws uniformly among the
/// productions that can still terminate within the remaining budget, then
/// draws each parameter uniformly from its domain.
inline DerivationTree sample_tree(const Grammar& g, std::size_t max_depth, Rng& rng,
                                  const std::string& nonterminal = {}) {
  if (max_depth == 0) throw ValidationError("max_depth must be at least 1");
  return detail::sample_nonterminal(g, nonterminal.empty() ? g.start() : nonterminal, max_depth,
                                    rng);
}

/// Preorder node addressing; index 0 is the root.
inline const DerivationTree& node_at(const DerivationTree& t, std::size_t index) {
  const DerivationTree* found = nullptr;
  std::size_t i = 0;
  detail::for_each_preorder(t, [&](const DerivationTree& n, std::size_t) {
    if (i++ == index) found = &n;
  });
  if (found == nullptr) throw std::out_of_range("node index out of range");
  return *found;
}

inline std::size_t depth_at(const DerivationTree& t, std::size_t index) {
  std::size_t found = 0;
  std::size_t i = 0;
  detail::for_each_preorder(t, [&](const DerivationTree&, std::size_t d) {
    if (i++ == index) found = d;
  });
  if (found == 0) throw std::out_of_range("node index out of range");
  return found;
}

/// Copy of `t` with the subtree at preorder `index` replaced.
inline DerivationTree replace_at(const DerivationTree& t, std::size_t index,
                                 DerivationTree replacement) {
  DerivationTree out = t;
  DerivationTree* target = nullptr;
  std::size_t i = 0;
  detail::for_each_preorder(out, [&](DerivationTree& n, std::size_t) {
    if (i++ == index) target = &n;
  });
  if (target == nullptr) throw std::out_of_range("node index out of range");
  *target = std::move(replacement);
  return out;
}

/// Subtree mutation: picks one node uniformly (root included) and
/// resamples its nonterminal so that the whole tree stays within
/// `max_depth`. Retries a fresh node choice up to `retries` times when the
/// chosen slot cannot be resampled.
inline DerivationTree mutate_subtree(const Grammar& g, const DerivationTree& t,
                                     std::size_t max_depth, Rng& rng,
                                     std::size_t retries = kDefaultMutationRetries) {
  const std::size_t n = t.size();
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  for (std::size_t attempt = 0;; ++attempt) {
    const std::size_t index = dist(rng);
    const std::size_t depth = depth_at(t, index);
    const std::string& nt = node_at(t, index).nonterminal;
    try {
      if (depth > max_depth) throw SamplingExhausted("mutation site below max_depth");
      auto fresh = sample_tree(g, max_depth - depth + 1, rng, nt);
      return replace_at(t, index, std::move(fresh));
    } catch (const SamplingExhausted&) {
      if (attempt + 1 >= retries) throw;
    }
  }
}

inline nlohmann::json to_json(const DerivationTree& t) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : t.params) params[k] = to_json_value(v);
  nlohmann::json children = nlohmann::json::array();
  for (const auto& c : t.children) children.push_back(to_json(c));
  return {{"nt", t.nonterminal}, {"production", t.production}, {"params", params},
          {"children", children}};
}

}  // namespace snas
