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

// Graph features (GRAF) per operation kind, adapted to grammar-derived
// graphs: counts, shortest/longest input->output path through the kind,
// and max in/out degree over nodes of the kind.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "snas/compiler.hpp"
#include "snas/error.hpp"
#include "snas/grammar.hpp"

namespace snas {

/// Path features of a kind with no occurrence in the graph.
inline constexpr double kMissingPath = -1.0;

inline constexpr std::size_t kGrafFeaturesPerKind = 5;

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> schema;

  std::size_t size() const { return values.size(); }

  std::optional<double> get(std::string_view name) const {
    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (schema[i] == name) return values[i];
    }
    return std::nullopt;
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Every kind that can appear as a graph node, in declaration order.
inline std::vector<OpKind> graph_op_kinds() {
  std::vector<OpKind> out;
  for (OpKind k : kAllOpKinds) {
    if (!is_structural(k)) out.push_back(k);
  }
  return out;
}

inline std::vector<std::string> graf_schema(const std::vector<OpKind>& kinds) {
  std::vector<std::string> schema;
  for (OpKind k : kinds) {
    const std::string n(op_name(k));
    schema.push_back("count_" + n);
    schema.push_back("min_path_" + n);
    schema.push_back("max_path_" + n);
    schema.push_back("max_in_degree_" + n);
    schema.push_back("max_out_degree_" + n);
  }
  return schema;
}

/// Shortest and longest edge counts from the input marker to every node and
/// from every node to the output marker, by DP over a topological order.
struct PathTable {
  std::vector<std::size_t> min_from_input, max_from_input;
  std::vector<std::size_t> min_to_output, max_to_output;
};

inline PathTable path_table(const ArchGraph& g) {
  constexpr auto kInf = std::numeric_limits<std::size_t>::max();
  const std::size_t n = g.nodes.size();
  const auto order = topological_order(g);
  const auto preds = g.predecessor_lists();
  const auto succ = g.successor_lists();
  PathTable t{std::vector<std::size_t>(n, kInf), std::vector<std::size_t>(n, 0),
              std::vector<std::size_t>(n, kInf), std::vector<std::size_t>(n, 0)};
  t.min_from_input[g.input_id] = 0;
  for (std::size_t v : order) {
    for (std::size_t p : preds[v]) {
      if (t.min_from_input[p] == kInf) continue;
      t.min_from_input[v] = std::min(t.min_from_input[v], t.min_from_input[p] + 1);
      t.max_from_input[v] = std::max(t.max_from_input[v], t.max_from_input[p] + 1);
    }
  }
  t.min_to_output[g.output_id] = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t v = *it;
    for (std::size_t s : succ[v]) {
      if (t.min_to_output[s] == kInf) continue;
      t.min_to_output[v] = std::min(t.min_to_output[v], t.min_to_output[s] + 1);
      t.max_to_output[v] = std::max(t.max_to_output[v], t.max_to_output[s] + 1);
    }
  }
  return t;
}

/// For each kind, in order: count, min_path, max_path, max_in_degree,
/// max_out_degree. A path through a kind is an input->output path visiting
/// at least one node of that kind; its length is counted in edges.
/// Absent kinds get kMissingPath for both path features and 0 elsewhere.
inline FeatureVector extract_graf(const ArchGraph& g, const std::vector<OpKind>& kinds) {
  const PathTable paths = path_table(g);
  std::vector<std::size_t> indeg(g.nodes.size(), 0), outdeg(g.nodes.size(), 0);
  for (const auto& [from, to] : g.edges) {
    ++outdeg[from];
    ++indeg[to];
  }
  FeatureVector fv{{}, graf_schema(kinds)};
  fv.values.reserve(kinds.size() * kGrafFeaturesPerKind);
  for (OpKind k : kinds) {
    std::size_t count = 0, max_in = 0, max_out = 0;
    std::size_t min_path = std::numeric_limits<std::size_t>::max(), max_path = 0;
    for (const auto& node : g.nodes) {
      if (node.role != NodeRole::Op || node.kind != k) continue;
      ++count;
      min_path = std::min(min_path, paths.min_from_input[node.id] + paths.min_to_output[node.id]);
      max_path = std::max(max_path, paths.max_from_input[node.id] + paths.max_to_output[node.id]);
      max_in = std::max(max_in, indeg[node.id]);
      max_out = std::max(max_out, outdeg[node.id]);
    }
    fv.values.push_back(static_cast<double>(count));
    fv.values.push_back(count == 0 ? kMissingPath : static_cast<double>(min_path));
    fv.values.push_back(count == 0 ? kMissingPath : static_cast<double>(max_path));
    fv.values.push_back(static_cast<double>(max_in));
    fv.values.push_back(static_cast<double>(max_out));
  }
  return fv;
}

inline FeatureVector extract_graf(const ArchGraph& g) { return extract_graf(g, graph_op_kinds()); }

/// Surrogate input: GRAF columns first, then any extra columns (e.g.
/// precomputed zero-cost proxies). Schemas must be disjoint.
inline FeatureVector assemble_input(const FeatureVector& graf,
                                    const std::optional<FeatureVector>& extra) {
  if (!extra) return graf;
  std::unordered_set<std::string> names(graf.schema.begin(), graf.schema.end());
  FeatureVector out = graf;
  for (std::size_t i = 0; i < extra->size(); ++i) {
    if (!names.insert(extra->schema[i]).second) {
      throw SchemaError("feature '" + extra->schema[i] + "' appears in both inputs");
    }
    if (!std::isfinite(extra->values[i])) {
      throw SchemaError("feature '" + extra->schema[i] + "' is not finite");
    }
    out.schema.push_back(extra->schema[i]);
    out.values.push_back(extra->values[i]);
  }
  return out;
}

inline nlohmann::json schema_to_json(const std::vector<std::string>& schema) {
  return nlohmann::json(schema);
}

}  // namespace snas
