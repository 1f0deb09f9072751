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

// Training-set augmentation for architecture/accuracy pairs: four tree
// rewrites plus small Gaussian label noise.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "snas/error.hpp"
#include "snas/grammar.hpp"

namespace snas {

enum class AugmentKind : std::uint8_t { SwapSequential, SwapBranches, InsertIdentity, PerturbDim };

inline constexpr std::array<AugmentKind, 4> kAllAugmentKinds = {
    AugmentKind::SwapSequential, AugmentKind::SwapBranches, AugmentKind::InsertIdentity,
    AugmentKind::PerturbDim};

/// Output dimensionalities a linear layer may be perturbed between.
inline constexpr std::array<std::int64_t, 8> kLinearDims = {16, 32, 64, 128, 256, 512, 1024, 2048};

inline constexpr double kLabelNoiseStd = 0.005;

inline std::string_view augment_name(AugmentKind k) {
  switch (k) {
    case AugmentKind::SwapSequential: return "swap_sequential";
    case AugmentKind::SwapBranches: return "swap_branches";
    case AugmentKind::InsertIdentity: return "insert_identity";
    case AugmentKind::PerturbDim: return "perturb_dim";
  }
  return "?";
}

/// `source_kind` is empty for an original (unaugmented) sample.
struct AugmentedSample {
  DerivationTree tree;
  double accuracy = 0.0;
  std::optional<AugmentKind> source_kind;
};

namespace detail {

// sequential production of `nt` with exactly two members, both `nt`.
inline bool is_binary_sequential(const Production& p, const std::string& nt) {
  if (!p.is_composite() || p.head().kind != OpKind::Sequential || p.rhs.size() != 3) return false;
  for (std::size_t i = 1; i < 3; ++i) {
    const auto* ref = std::get_if<NonterminalRef>(&p.rhs[i]);
    if (ref == nullptr || ref->name != nt) return false;
  }
  return true;
}

inline bool is_binary_sequential(const Grammar& g, const DerivationTree& n) {
  return is_binary_sequential(g.production_of(n), n.nonterminal);
}

inline const Production* find_binary_sequential(const Grammar& g, const std::string& nt) {
  for (const auto& p : g.productions(nt)) {
    if (is_binary_sequential(p, nt)) return &p;
  }
  return nullptr;
}

inline const Production* find_identity(const Grammar& g, const std::string& nt) {
  for (const auto& p : g.productions(nt)) {
    if (p.is_composite() || p.rhs.size() != 1) continue;
    const auto& op = std::get<OpSpec>(p.rhs.front());
    if (op.kind == OpKind::Identity && op.args.empty()) return &p;
  }
  return nullptr;
}

inline bool is_two_branch(const Grammar& g, const DerivationTree& n) {
  const Production& p = g.production_of(n);
  if (!p.is_composite() || p.head().kind != OpKind::Branching || p.rhs.size() != 5) return false;
  const auto* a = std::get_if<NonterminalRef>(&p.rhs[2]);
  const auto* b = std::get_if<NonterminalRef>(&p.rhs[3]);
  return a != nullptr && b != nullptr && a->name == b->name;
}

struct Site {
  std::size_t node;
  std::size_t variant;  // direction, or parameter slot
};

inline std::size_t dim_position(std::int64_t d) {
  return static_cast<std::size_t>(std::find(kLinearDims.begin(), kLinearDims.end(), d) -
                                  kLinearDims.begin());
}

inline std::vector<std::int64_t> dim_neighbours(const Production& p, std::size_t slot,
                                                std::int64_t d) {
  std::vector<std::int64_t> out;
  const std::size_t pos = dim_position(d);
  if (pos == kLinearDims.size()) return out;
  const auto& domain = p.param_domains[slot].second;
  auto allowed = [&](std::int64_t v) {
    return std::find(domain.begin(), domain.end(), ParamValue{v}) != domain.end();
  };
  if (pos > 0 && allowed(kLinearDims[pos - 1])) out.push_back(kLinearDims[pos - 1]);
  if (pos + 1 < kLinearDims.size() && allowed(kLinearDims[pos + 1])) out.push_back(kLinearDims[pos + 1]);
  return out;
}

// Parameter slots bound to the `d` argument of a linear op in `p`.
inline std::vector<std::size_t> linear_dim_slots(const Production& p) {
  std::vector<std::size_t> slots;
  for (const Symbol& s : p.rhs) {
    const auto* op = std::get_if<OpSpec>(&s);
    if (op == nullptr || op->kind != OpKind::Linear) continue;
    for (const OpArg& a : op->args) {
      if (a.name != "d" || !a.binding) continue;
      for (std::size_t i = 0; i < p.param_domains.size(); ++i) {
        if (p.param_domains[i].first == *a.binding &&
            std::find(slots.begin(), slots.end(), i) == slots.end()) {
          slots.push_back(i);
        }
      }
    }
  }
  return slots;
}

inline std::vector<Site> find_sites(const Grammar& g, const DerivationTree& t, AugmentKind kind) {
  std::vector<Site> sites;
  std::size_t index = 0;
  for_each_preorder(t, [&](const DerivationTree& n, std::size_t) {
    const std::size_t i = index++;
    switch (kind) {
      case AugmentKind::SwapSequential:
        if (is_binary_sequential(g, n)) {
          if (is_binary_sequential(g, n.children[1])) sites.push_back({i, 0});
          if (is_binary_sequential(g, n.children[0])) sites.push_back({i, 1});
        }
        break;
      case AugmentKind::SwapBranches:
        if (is_two_branch(g, n)) sites.push_back({i, 0});
        break;
      case AugmentKind::InsertIdentity:
        if (find_binary_sequential(g, n.nonterminal) && find_identity(g, n.nonterminal)) {
          sites.push_back({i, 0});
        }
        break;
      case AugmentKind::PerturbDim: {
        const Production& p = g.production_of(n);
        for (std::size_t slot : linear_dim_slots(p)) {
          const auto* d = std::get_if<std::int64_t>(&n.params[slot].second);
          if (d != nullptr && !dim_neighbours(p, slot, *d).empty()) sites.push_back({i, slot});
        }
        break;
      }
    }
  });
  return sites;
}

inline DerivationTree rewrite(const Grammar& g, const DerivationTree& t, AugmentKind kind,
                              const Site& site, Rng& rng) {
  DerivationTree n = node_at(t, site.node);
  switch (kind) {
    case AugmentKind::SwapSequential: {
      if (site.variant == 0) {
        // (a, (b, c)) -> ((a, b), c)
        DerivationTree inner = std::move(n.children[1]);
        DerivationTree a = std::move(n.children[0]);
        DerivationTree c = std::move(inner.children[1]);
        inner.children[1] = std::move(inner.children[0]);
        inner.children[0] = std::move(a);
        n.children[0] = std::move(inner);
        n.children[1] = std::move(c);
      } else {
        // ((a, b), c) -> (a, (b, c))
        DerivationTree inner = std::move(n.children[0]);
        DerivationTree c = std::move(n.children[1]);
        DerivationTree a = std::move(inner.children[0]);
        inner.children[0] = std::move(inner.children[1]);
        inner.children[1] = std::move(c);
        n.children[0] = std::move(a);
        n.children[1] = std::move(inner);
      }
      break;
    }
    case AugmentKind::SwapBranches:
      std::swap(n.children[0], n.children[1]);
      break;
    case AugmentKind::InsertIdentity: {
      const Production* seq = find_binary_sequential(g, n.nonterminal);
      const Production* id = find_identity(g, n.nonterminal);
      DerivationTree identity{n.nonterminal, id->name, {}, {}};
      DerivationTree wrapped{n.nonterminal, seq->name, {}, {}};
      wrapped.children.push_back(std::move(n));
      wrapped.children.push_back(std::move(identity));
      n = std::move(wrapped);
      break;
    }
    case AugmentKind::PerturbDim: {
      const Production& p = g.production_of(n);
      auto& value = n.params[site.variant].second;
      value = pick(dim_neighbours(p, site.variant, std::get<std::int64_t>(value)), rng);
      break;
    }
  }
  return replace_at(t, site.node, std::move(n));
}

}  // namespace detail

/// Kinds with at least one applicable site in `t`, in declaration order.
inline std::vector<AugmentKind> applicable_kinds(const Grammar& g, const DerivationTree& t) {
  std::vector<AugmentKind> out;
  for (AugmentKind k : kAllAugmentKinds) {
    if (!detail::find_sites(g, t, k).empty()) out.push_back(k);
  }
  return out;
}

inline double perturb_label(double accuracy, Rng& rng) {
  std::normal_distribution<double> noise(0.0, kLabelNoiseStd);
  return std::clamp(accuracy + noise(rng), 0.0, 1.0);
}

/// Applies one rewrite of `kind` at a uniformly chosen site and perturbs the
/// label:
///   SwapSequential  sequential(a, sequential(b, c)) <-> sequential(sequential(a, b), c)
///   SwapBranches    exchange the two branches of a branching(2)
///   InsertIdentity  subtree -> sequential(subtree, identity)
///   PerturbDim      linear(d) -> linear(d') with d' adjacent to d in kLinearDims
inline AugmentedSample augment(const Grammar& g, const DerivationTree& t, double accuracy,
                               AugmentKind kind, Rng& rng) {
  const auto sites = detail::find_sites(g, t, kind);
  if (sites.empty()) {
    throw NotApplicable(std::string("no site for ") + std::string(augment_name(kind)));
  }
  const detail::Site& site = detail::pick(sites, rng);
  DerivationTree out = detail::rewrite(g, t, kind, site, rng);
  return {std::move(out), perturb_label(accuracy, rng), kind};
}

/// Keeps every original and adds up to `factor` augmented variants of each,
/// cycling over its applicable kinds from a random starting kind.
inline std::vector<AugmentedSample> expand_dataset(
    const Grammar& g, const std::vector<std::pair<DerivationTree, double>>& samples,
    std::size_t factor, Rng& rng) {
  if (factor == 0) throw ValidationError("augmentation factor must be at least 1");
  std::vector<AugmentedSample> out;
  for (const auto& [tree, acc] : samples) {
    out.push_back({tree, acc, std::nullopt});
    const auto kinds = applicable_kinds(g, tree);
    if (kinds.empty()) continue;
    std::uniform_int_distribution<std::size_t> start_dist(0, kinds.size() - 1);
    const std::size_t start = start_dist(rng);
    for (std::size_t i = 0; i < factor; ++i) {
      out.push_back(augment(g, tree, acc, kinds[(start + i) % kinds.size()], rng));
    }
  }
  return out;
}

}  // namespace snas
