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

// Surrogate models f(E(a)) -> predicted performance: training sets,
// per-dataset target normalization, and the fit/predict interface backed by
// either the in-repo forest or an external worker process.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "snas/bridge.hpp"
#include "snas/error.hpp"
#include "snas/features.hpp"
#include "snas/forest.hpp"

namespace snas {

/// One labelled architecture. `features` feeds tabular models, `encoding`
/// feeds string-based ones; a row may carry either or both.
struct TrainingRow {
  std::optional<FeatureVector> features;
  std::string encoding;
  double target = 0.0;
  std::string dataset;
};

struct TrainingSet {
  std::vector<TrainingRow> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  std::vector<double> targets() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.target);
    return out;
  }

  /// Stacks the feature rows; every row must carry features with one schema.
  FeatureMatrix feature_matrix() const {
    if (rows.empty()) return {};
    if (!rows.front().features) throw SchemaError("training row has no feature vector");
    FeatureMatrix m(rows.front().features->schema);
    m.data.reserve(rows.size() * m.cols);
    for (const auto& r : rows) {
      if (!r.features) throw SchemaError("training row has no feature vector");
      if (r.features->schema != m.schema) throw SchemaError("inconsistent feature schema across rows");
      m.add_row(r.features->values);
    }
    return m;
  }

  void append(const TrainingSet& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  }
};

enum class NormalizationMethod : std::uint8_t { None, MinMax, Percentile };

inline std::string_view normalization_name(NormalizationMethod m) {
  switch (m) {
    case NormalizationMethod::None: return "none";
    case NormalizationMethod::MinMax: return "minmax";
    case NormalizationMethod::Percentile: return "percentile";
  }
  return "?";
}

inline std::optional<NormalizationMethod> parse_normalization(std::string_view s) {
  for (auto m : {NormalizationMethod::None, NormalizationMethod::MinMax, NormalizationMethod::Percentile}) {
    if (normalization_name(m) == s) return m;
  }
  return std::nullopt;
}

/// Per-dataset target scaling applied before datasets are merged.
///   MinMax:     (y - min_d) / (max_d - min_d); a constant dataset maps to 0.5.
///   Percentile: average rank of y among dataset d's targets over (n_d - 1);
///               a single-row dataset maps to 0.5. Values not seen at fit
///               time take rank (#smaller - 0.5), clamped to [0, n_d - 1].
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(NormalizationMethod method, std::map<std::string, std::vector<double>> sorted)
      : method_(method), sorted_(std::move(sorted)) {}

  NormalizationMethod method() const { return method_; }

  bool knows(const std::string& dataset) const { return sorted_.count(dataset) != 0; }

  double apply(const std::string& dataset, double y) const {
    if (method_ == NormalizationMethod::None) return y;
    auto it = sorted_.find(dataset);
    if (it == sorted_.end()) throw ValidationError("normalizer: unknown dataset '" + dataset + "'");
    const auto& s = it->second;
    if (method_ == NormalizationMethod::MinMax) {
      const double lo = s.front(), hi = s.back();
      if (hi == lo) return 0.5;
      return (y - lo) / (hi - lo);
    }
    const std::size_t n = s.size();
    if (n == 1) return 0.5;
    const auto lo = std::lower_bound(s.begin(), s.end(), y);
    const auto hi = std::upper_bound(s.begin(), s.end(), y);
    const auto less = static_cast<double>(lo - s.begin());
    const auto equal = static_cast<double>(hi - lo);
    double rank = equal > 0 ? less + (equal - 1.0) / 2.0 : less - 0.5;
    rank = std::clamp(rank, 0.0, static_cast<double>(n - 1));
    return rank / static_cast<double>(n - 1);
  }

 private:
  NormalizationMethod method_ = NormalizationMethod::None;
  std::map<std::string, std::vector<double>> sorted_;
};

inline Normalizer fit_normalizer(const TrainingSet& data, NormalizationMethod method) {
  std::map<std::string, std::vector<double>> per_dataset;
  for (const auto& r : data.rows) per_dataset[r.dataset].push_back(r.target);
  for (auto& [_, v] : per_dataset) std::sort(v.begin(), v.end());
  return Normalizer(method, std::move(per_dataset));
}

inline TrainingSet normalize(const Normalizer& nrm, TrainingSet data) {
  for (auto& r : data.rows) r.target = nrm.apply(r.dataset, r.target);
  return data;
}

/// What a surrogate sees of one candidate.
struct SurrogateInput {
  std::optional<FeatureVector> features;
  std::string encoding;
};

class Surrogate {
 public:
  virtual ~Surrogate() = default;
  virtual void fit(const TrainingSet& data) = 0;
  virtual std::vector<double> predict(const std::vector<SurrogateInput>& inputs) = 0;
  virtual bool fitted() const = 0;
};

struct ForestSurrogateConfig {
  ForestParams params;
  std::uint64_t seed = 0;
  /// Drop rows whose target is exactly zero (failed evaluations) before fitting.
  bool drop_zero = false;
};

/// Tabular surrogate on feature vectors. Each fit reseeds from the base
/// seed and a fit counter, so repeated runs refit identically.
class ForestSurrogate final : public Surrogate {
 public:
  explicit ForestSurrogate(ForestSurrogateConfig cfg) : cfg_(cfg) {}

  void fit(const TrainingSet& data) override {
    TrainingSet use;
    for (const auto& r : data.rows) {
      if (cfg_.drop_zero && r.target == 0.0) continue;
      if (r.features) use.rows.push_back(r);
    }
    if (use.size() < 2) throw ValidationError("forest surrogate needs at least two featurized rows");
    const auto x = use.feature_matrix();
    const auto y = use.targets();
    model_ = fit_forest(x, y, cfg_.params, cfg_.seed + fits_++);
  }

  std::vector<double> predict(const std::vector<SurrogateInput>& inputs) override {
    if (!model_) throw ValidationError("forest surrogate used before fit");
    std::vector<double> out;
    out.reserve(inputs.size());
    for (const auto& in : inputs) {
      if (!in.features) throw SchemaError("forest surrogate needs feature vectors");
      if (in.features->schema != model_->schema()) {
        throw SchemaError("feature schema differs from the training schema");
      }
      out.push_back(model_->predict_row(in.features->values));
    }
    return out;
  }

  bool fitted() const override { return model_.has_value(); }
  const std::optional<ForestModel>& model() const { return model_; }

 private:
  ForestSurrogateConfig cfg_;
  std::optional<ForestModel> model_;
  std::uint64_t fits_ = 0;
};

/// String surrogate living in a worker process (see bridge.hpp).
class ExternalSurrogate final : public Surrogate {
 public:
  explicit ExternalSurrogate(const std::vector<std::string>& argv, BridgeTimeouts timeouts = {})
      : client_(std::make_unique<BridgeClient>(argv, timeouts)) {}

  void fit(const TrainingSet& data) override {
    std::vector<std::pair<std::string, double>> rows;
    rows.reserve(data.size());
    for (const auto& r : data.rows) {
      if (r.encoding.empty()) throw SchemaError("external surrogate needs encodings");
      rows.emplace_back(r.encoding, r.target);
    }
    client_->fit(rows);
    fitted_ = true;
  }

  std::vector<double> predict(const std::vector<SurrogateInput>& inputs) override {
    std::vector<std::string> enc;
    enc.reserve(inputs.size());
    for (const auto& in : inputs) enc.push_back(in.encoding);
    return client_->predict(enc);
  }

  bool fitted() const override { return fitted_; }

 private:
  std::unique_ptr<BridgeClient> client_;
  bool fitted_ = false;
};

}  // namespace snas
