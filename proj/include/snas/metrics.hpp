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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "snas/error.hpp"

namespace snas {

/// Rank correlations of one prediction/target comparison. A coefficient is
/// empty when it is undefined (one side entirely tied).
struct CorrelationReport {
  std::optional<double> spearman;
  std::optional<double> kendall;
  std::size_t n = 0;

  bool degenerate() const { return !spearman || !kendall; }
};

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("correlation: inputs differ in length");
  if (x.size() < 2) throw ValidationError("correlation: needs at least two observations");
}

inline int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace detail

/// Kendall's tau-b, (C - D) / sqrt((C + D + Tx)(C + D + Ty)), counting
/// concordant, discordant and single-side-tied pairs in O(n^2).
inline std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  std::int64_t concordant = 0, discordant = 0, tied_x = 0, tied_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const int sx = detail::sign(x[i] - x[j]);
      const int sy = detail::sign(y[i] - y[j]);
      if (sx == 0 && sy == 0) continue;
      if (sx == 0) {
        ++tied_x;
      } else if (sy == 0) {
        ++tied_y;
      } else if (sx == sy) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double nx = static_cast<double>(concordant + discordant + tied_x);
  const double ny = static_cast<double>(concordant + discordant + tied_y);
  if (nx == 0.0 || ny == 0.0) return std::nullopt;
  return static_cast<double>(concordant - discordant) / std::sqrt(nx * ny);
}

/// 1-based ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman's rho: Pearson correlation of average ranks.
inline std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

inline CorrelationReport correlation_report(std::span<const double> predicted,
                                            std::span<const double> actual) {
  return {spearman_rho(predicted, actual), kendall_tau(predicted, actual), predicted.size()};
}

inline nlohmann::json to_json(const CorrelationReport& r) {
  nlohmann::json j;
  j["spearman"] = r.spearman ? nlohmann::json(*r.spearman) : nlohmann::json(nullptr);
  j["kendall"] = r.kendall ? nlohmann::json(*r.kendall) : nlohmann::json(nullptr);
  j["n"] = r.n;
  j["degenerate"] = r.degenerate();
  return j;
}

}  // namespace snas
