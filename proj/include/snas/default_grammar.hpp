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

#include <string_view>

#include "snas/grammar.hpp"

namespace snas {

/// Contents of grammars/mini_einspace.json, compiled in so the library and
/// CLI work without a grammar path.
inline constexpr std::string_view kMiniEinspaceGrammar = R"json(
{
  "start": "NET_IM",
  "rules": {
    "NET_IM": [
      {"name": "sequential", "rhs": [{"op": {"kind": "sequential"}}, {"nt": "NET_IM"}, {"nt": "NET_IM"}]},
      {"name": "branching2-add", "rhs": [{"op": {"kind": "branching", "params": {"b": 2}}}, {"op": {"kind": "clone", "params": {"b": 2}}}, {"nt": "NET_IM"}, {"nt": "NET_IM"}, {"op": {"kind": "add"}}]},
      {"name": "conv-block", "rhs": [{"op": {"kind": "routing"}}, {"op": {"kind": "im2col", "params": {"k": "$k", "s": "$s", "p": "$p"}}}, {"nt": "NET_COL"}, {"op": {"kind": "col2im"}}], "param_domains": {"k": [1, 3, 5], "s": [1, 2], "p": [0, 1, 2]}},
      {"name": "norm", "rhs": [{"op": {"kind": "norm"}}]},
      {"name": "relu", "rhs": [{"op": {"kind": "relu"}}]},
      {"name": "identity", "rhs": [{"op": {"kind": "identity"}}]}
    ],
    "NET_COL": [
      {"name": "sequential", "rhs": [{"op": {"kind": "sequential"}}, {"nt": "NET_COL"}, {"nt": "NET_COL"}]},
      {"name": "linear", "rhs": [{"op": {"kind": "linear", "params": {"d": "$d"}}}], "param_domains": {"d": [16, 32, 64, 128, 256, 512, 1024, 2048]}},
      {"name": "softmax", "rhs": [{"op": {"kind": "softmax"}}]},
      {"name": "pos_enc", "rhs": [{"op": {"kind": "pos_enc"}}]},
      {"name": "norm", "rhs": [{"op": {"kind": "norm"}}]},
      {"name": "relu", "rhs": [{"op": {"kind": "relu"}}]},
      {"name": "identity", "rhs": [{"op": {"kind": "identity"}}]}
    ]
  }
}
)json";

inline const Grammar& default_grammar() {
  static const Grammar g = load_grammar(kMiniEinspaceGrammar);
  return g;
}

}  // namespace snas
