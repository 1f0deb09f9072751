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

// Random-forest regression: bootstrap-aggregated CART trees, splits chosen
// by variance reduction over all features.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "snas/error.hpp"
#include "snas/grammar.hpp"

namespace snas {

/// Dense row-major design matrix with named columns.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<std::string> schema;

  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<std::string> names) : cols(names.size()), schema(std::move(names)) {}

  void add_row(std::span<const double> values) {
    if (values.size() != cols) throw SchemaError("row has " + std::to_string(values.size()) +
                                                 " features, schema has " + std::to_string(cols));
    data.insert(data.end(), values.begin(), values.end());
    ++rows;
  }

  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t min_samples_leaf = 1;
};

/// Flattened binary tree; `feature < 0` marks a leaf. Samples with
/// x[feature] <= threshold go left.
class RegressionTree {
 public:
  struct Node {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };

  RegressionTree() = default;
  explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const {
    std::int32_t i = 0;
    while (nodes_[i].feature >= 0) {
      const Node& n = nodes_[i];
      i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes_[i].value;
  }

  const std::vector<Node>& nodes() const { return nodes_; }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
  }

  friend bool operator==(const RegressionTree& a, const RegressionTree& b) {
    if (a.nodes_.size() != b.nodes_.size()) return false;
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
      const Node& x = a.nodes_[i];
      const Node& y = b.nodes_[i];
      if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left ||
          x.right != y.right || x.value != y.value) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<Node> nodes_;
};

namespace detail {

// CART builder over a bootstrap sample. Every feature keeps the sample
// positions sorted by (x, y); a node owns the same [begin, end) range in
// each list and a split stably partitions all lists. Sums are taken in
// that canonical order, so the tree depends only on the multiset of sampled
// rows, never on their order in the training set.
class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> y, std::span<const std::size_t> sample,
              std::size_t min_leaf, std::span<const std::size_t> features)
      : x_(x), y_(y), sample_(sample), min_leaf_(std::max<std::size_t>(min_leaf, 1)),
        features_(features.begin(), features.end()) {}

  RegressionTree build() {
    const std::size_t m = sample_.size();
    if (features_.empty()) {
      order_.emplace_back(m);
      std::iota(order_.back().begin(), order_.back().end(), 0);
      std::sort(order_.back().begin(), order_.back().end(),
                [&](std::size_t a, std::size_t b) { return yv(a) < yv(b); });
    }
    for (std::size_t f : features_) {
      std::vector<std::size_t> idx(m);
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double xa = xv(a, f), xb = xv(b, f);
        if (xa != xb) return xa < xb;
        return yv(a) < yv(b);
      });
      order_.push_back(std::move(idx));
    }
    scratch_.resize(m);
    goes_left_.assign(m, 0);
    grow(0, m);
    return RegressionTree(std::move(nodes_));
  }

 private:
  double xv(std::size_t pos, std::size_t f) const { return x_.at(sample_[pos], f); }
  double yv(std::size_t pos) const { return y_[sample_[pos]]; }

  std::int32_t grow(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    const auto& canon = order_.front();
    const std::size_t count = end - begin;
    double sum = 0.0;
    bool pure = true;
    const double first = yv(canon[begin]);
    for (std::size_t i = begin; i < end; ++i) {
      const double v = yv(canon[i]);
      sum += v;
      pure = pure && v == first;
    }
    // A pure leaf stores the target exactly rather than sum / count.
    nodes_[id].value = pure ? first : sum / static_cast<double>(count);
    if (pure || count < 2 * min_leaf_ || features_.empty()) return id;

    const double parent_score = sum * sum / static_cast<double>(count);
    double best_score = parent_score;
    std::size_t best_slot = 0;
    double best_threshold = 0.0;
    bool found = false;
    for (std::size_t slot = 0; slot < features_.size(); ++slot) {
      const std::size_t f = features_[slot];
      const auto& ord = order_[slot];
      double left_sum = 0.0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        left_sum += yv(ord[i]);
        const std::size_t n_left = i - begin + 1;
        const std::size_t n_right = count - n_left;
        if (n_left < min_leaf_) continue;
        if (n_right < min_leaf_) break;
        const double lo = xv(ord[i], f);
        const double hi = xv(ord[i + 1], f);
        if (lo == hi) continue;
        const double right_sum = sum - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(n_left) +
                             right_sum * right_sum / static_cast<double>(n_right);
        if (score > best_score) {
          best_score = score;
          best_slot = slot;
          double mid = lo + (hi - lo) / 2.0;
          if (mid >= hi) mid = lo;
          best_threshold = mid;
          found = true;
        }
      }
    }
    const double tolerance = 1e-12 * std::max(1.0, std::abs(parent_score));
    if (!found || best_score - parent_score <= tolerance) return id;

    const std::size_t f = features_[best_slot];
    std::size_t n_left = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t pos = order_[best_slot][i];
      goes_left_[pos] = xv(pos, f) <= best_threshold ? 1 : 0;
      n_left += goes_left_[pos];
    }
    for (auto& ord : order_) {
      std::size_t l = begin, r = begin + n_left;
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t pos = ord[i];
        (goes_left_[pos] ? scratch_[l++] : scratch_[r++]) = pos;
      }
      std::copy(scratch_.begin() + static_cast<std::ptrdiff_t>(begin),
                scratch_.begin() + static_cast<std::ptrdiff_t>(end),
                ord.begin() + static_cast<std::ptrdiff_t>(begin));
    }
    nodes_[id].feature = static_cast<std::int32_t>(f);
    nodes_[id].threshold = best_threshold;
    const std::int32_t left = grow(begin, begin + n_left);
    const std::int32_t right = grow(begin + n_left, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  const FeatureMatrix& x_;
  std::span<const double> y_;
  std::span<const std::size_t> sample_;
  std::size_t min_leaf_;
  std::vector<std::size_t> features_;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<std::size_t> scratch_;
  std::vector<unsigned char> goes_left_;
  std::vector<RegressionTree::Node> nodes_;
};

}  // namespace detail

/// Columns that take more than one value over the training rows; constant
/// columns can never produce a split.
inline std::vector<std::size_t> varying_features(const FeatureMatrix& x) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < x.cols; ++c) {
    for (std::size_t r = 1; r < x.rows; ++r) {
      if (x.at(r, c) != x.at(0, c)) {
        out.push_back(c);
        break;
      }
    }
  }
  return out;
}

/// n draws with replacement from [0, n).
inline std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = dist(rng);
  return out;
}

/// One CART tree on the rows listed in `sample` (duplicates allowed), grown
/// until leaves are pure or a split would leave fewer than
/// `min_samples_leaf` samples on a side.
inline RegressionTree fit_tree(const FeatureMatrix& x, std::span<const double> y,
                               std::span<const std::size_t> sample, std::size_t min_samples_leaf) {
  const auto features = varying_features(x);
  return detail::TreeBuilder(x, y, sample, min_samples_leaf, features).build();
}

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<std::string> schema, std::vector<RegressionTree> trees, ForestParams params,
              std::uint64_t seed, double target_min, double target_max)
      : schema_(std::move(schema)), trees_(std::move(trees)), params_(params), seed_(seed),
        target_min_(target_min), target_max_(target_max) {}

  const std::vector<std::string>& schema() const { return schema_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

  /// Mean of the per-tree leaf values, kept inside the training target range.
  double predict_row(std::span<const double> x) const {
    if (x.size() != schema_.size()) throw SchemaError("input has wrong feature count");
    double sum = 0.0;
    bool same = true;
    const double first = trees_.front().predict(x);
    for (const auto& t : trees_) {
      const double v = t.predict(x);
      sum += v;
      same = same && v == first;
    }
    if (same) return first;
    return std::clamp(sum / static_cast<double>(trees_.size()), target_min_, target_max_);
  }

  std::vector<double> predict(const FeatureMatrix& x) const {
    if (x.schema != schema_) throw SchemaError("feature schema differs from the training schema");
    std::vector<double> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict_row(x.row(r));
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) {
      nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                     left = nlohmann::json::array(), right = nlohmann::json::array(),
                     value = nlohmann::json::array();
      for (const auto& n : t.nodes()) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
      }
      trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left},
                       {"right", right}, {"value", value}});
    }
    return {{"format", "snas-random-forest"},
            {"version", 1},
            {"schema", schema_},
            {"n_trees", params_.n_trees},
            {"min_samples_leaf", params_.min_samples_leaf},
            {"seed", seed_},
            {"target_range", {target_min_, target_max_}},
            {"trees", trees}};
  }

  static ForestModel from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "snas-random-forest") {
      throw ValidationError("not a random-forest model document");
    }
    ForestParams params{j.at("n_trees").get<std::size_t>(), j.at("min_samples_leaf").get<std::size_t>()};
    std::vector<RegressionTree> trees;
    for (const auto& tj : j.at("trees")) {
      std::vector<RegressionTree::Node> nodes(tj.at("feature").size());
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        nodes[i] = {tj["feature"][i].get<std::int32_t>(), tj["threshold"][i].get<double>(),
                    tj["left"][i].get<std::int32_t>(), tj["right"][i].get<std::int32_t>(),
                    tj["value"][i].get<double>()};
      }
      trees.emplace_back(std::move(nodes));
    }
    if (trees.empty()) throw ValidationError("model has no trees");
    return ForestModel(j.at("schema").get<std::vector<std::string>>(), std::move(trees), params,
                       j.at("seed").get<std::uint64_t>(), j.at("target_range")[0].get<double>(),
                       j.at("target_range")[1].get<double>());
  }

 private:
  std::vector<std::string> schema_;
  std::vector<RegressionTree> trees_;
  ForestParams params_;
  std::uint64_t seed_ = 0;
  double target_min_ = 0.0;
  double target_max_ = 0.0;
};

/// Fits `params.n_trees` trees, each on its own bootstrap sample. Tree t
/// draws its sample from a generator seeded with the t-th value of a
/// generator seeded with `seed`, so results do not depend on thread count.
inline ForestModel fit_forest(const FeatureMatrix& x, std::span<const double> y,
                              const ForestParams& params, std::uint64_t seed) {
  if (x.rows < 2 || y.size() != x.rows) throw ValidationError("forest needs at least two rows");
  if (params.n_trees == 0 || params.min_samples_leaf == 0) {
    throw ValidationError("n_trees and min_samples_leaf must be positive");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw ValidationError("training targets must be finite");
  }
  const auto features = varying_features(x);
  Rng master(seed);
  std::vector<std::uint64_t> tree_seeds(params.n_trees);
  for (auto& s : tree_seeds) s = master();

  std::vector<RegressionTree> trees(params.n_trees);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t t = first; t < params.n_trees; t += stride) {
      Rng rng(tree_seeds[t]);
      const auto sample = bootstrap_indices(x.rows, rng);
      trees[t] = detail::TreeBuilder(x, y, sample, params.min_samples_leaf, features).build();
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), params.n_trees);
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  return ForestModel(x.schema, std::move(trees), params, seed, *lo, *hi);
}

}  // namespace snas
