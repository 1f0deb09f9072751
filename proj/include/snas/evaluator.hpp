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

// Fitness evaluators standing in for train-and-evaluate. Every evaluator
// returns a value in [0, 1]; architectures that fail to compile score 0.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "snas/compiler.hpp"
#include "snas/encoder.hpp"
#include "snas/error.hpp"
#include "snas/features.hpp"
#include "snas/grammar.hpp"
#include "snas/subprocess.hpp"

namespace snas {

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual double evaluate(const Grammar& g, const DerivationTree& t,
                          const TensorShape& input_shape) const = 0;
  /// Self-describing configuration, recorded in run manifests.
  virtual nlohmann::json describe() const = 0;
};

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

// Noise keyed on the feature values, so fitness is a function of the GRAF
// vector alone.
inline double feature_noise(const FeatureVector& fv, std::uint64_t seed, double sigma) {
  if (sigma <= 0.0) return 0.0;
  std::uint64_t h = fnv1a(&seed, sizeof seed);
  for (double v : fv.values) h = fnv1a(&v, sizeof v, h);
  Rng rng(h);
  std::normal_distribution<double> n(0.0, sigma);
  return n(rng);
}

inline std::optional<FeatureVector> try_graf(const Grammar& g, const DerivationTree& t,
                                             const TensorShape& input_shape) {
  try {
    return extract_graf(compile(g, t, input_shape));
  } catch (const ShapeError&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// z-scoring statistics of GRAF features over a reference sample of the
/// grammar. Features with zero spread get std 0 and are ignored.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> std;

  static FeatureStats from_samples(const Grammar& g, const TensorShape& input_shape,
                                   std::size_t samples, std::uint64_t seed, std::size_t max_depth) {
    Rng rng(seed);
    std::vector<FeatureVector> rows;
    for (std::size_t i = 0; i < samples; ++i) {
      const auto t = sample_tree(g, max_depth, rng);
      if (auto fv = detail::try_graf(g, t, input_shape)) rows.push_back(std::move(*fv));
    }
    if (rows.empty()) throw ValidationError("no reference sample compiled");
    const std::size_t f = rows.front().size();
    FeatureStats s{std::vector<double>(f, 0.0), std::vector<double>(f, 0.0)};
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < f; ++j) s.mean[j] += r.values[j];
    }
    for (auto& m : s.mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < f; ++j) s.std[j] += (r.values[j] - s.mean[j]) * (r.values[j] - s.mean[j]);
    }
    for (auto& v : s.std) v = std::sqrt(v / static_cast<double>(rows.size()));
    return s;
  }
};

struct SyntheticLinearConfig {
  std::uint64_t seed = 0;
  double noise = 0.02;
  /// Search pushes z-scores far past the reference range; a small gain keeps
  /// the sigmoid out of saturation over a 300-iteration run.
  double gain = 0.03;
  double bias = 0.0;
  /// -1 flips every weight (an anti-correlated landscape).
  double sign = 1.0;
  std::uint64_t reference_seed = 20260101;
  std::size_t reference_samples = 1000;
  std::size_t max_depth = kDefaultMaxDepth;
};

/// sigmoid(w . z + bias) + N(0, noise^2), clamped to [0, 1], where z is the
/// GRAF vector z-scored with reference statistics and w ~ N(0, 1) scaled by
/// gain / sqrt(#informative features), drawn once from the seed.
class SyntheticLinearEvaluator final : public Evaluator {
 public:
  SyntheticLinearEvaluator(const Grammar& g, const TensorShape& input_shape, SyntheticLinearConfig cfg)
      : cfg_(cfg),
        stats_(FeatureStats::from_samples(g, input_shape, cfg.reference_samples, cfg.reference_seed,
                                          cfg.max_depth)) {
    Rng rng(cfg_.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::size_t informative = 0;
    for (double s : stats_.std) informative += s > 0.0 ? 1 : 0;
    const double scale = cfg_.sign * cfg_.gain / std::sqrt(static_cast<double>(std::max<std::size_t>(informative, 1)));
    weights_.resize(stats_.std.size());
    for (std::size_t j = 0; j < weights_.size(); ++j) {
      const double w = normal(rng);
      weights_[j] = stats_.std[j] > 0.0 ? w * scale : 0.0;
    }
  }

  /// Noise-free score of a feature vector.
  double score(const FeatureVector& fv) const {
    double logit = cfg_.bias;
    for (std::size_t j = 0; j < weights_.size(); ++j) {
      if (stats_.std[j] > 0.0) logit += weights_[j] * (fv.values[j] - stats_.mean[j]) / stats_.std[j];
    }
    return 1.0 / (1.0 + std::exp(-logit));
  }

  double evaluate(const Grammar& g, const DerivationTree& t, const TensorShape& input_shape) const override {
    const auto fv = detail::try_graf(g, t, input_shape);
    if (!fv) return 0.0;
    return std::clamp(score(*fv) + detail::feature_noise(*fv, cfg_.seed, cfg_.noise), 0.0, 1.0);
  }

  nlohmann::json describe() const override {
    return {{"kind", "synthetic_linear"},     {"seed", cfg_.seed},
            {"noise", cfg_.noise},            {"gain", cfg_.gain},
            {"bias", cfg_.bias},              {"sign", cfg_.sign},
            {"reference_seed", cfg_.reference_seed},
            {"reference_samples", cfg_.reference_samples},
            {"max_depth", cfg_.max_depth},    {"reference_mean", stats_.mean},
            {"reference_std", stats_.std}};
  }

  const std::vector<double>& weights() const { return weights_; }

 private:
  SyntheticLinearConfig cfg_;
  FeatureStats stats_;
  std::vector<double> weights_;
};

struct SyntheticDepthConfig {
  std::uint64_t seed = 0;
  double noise = 0.02;
  double depth_scale = 64.0;
  double norm_scale = 32.0;
};

/// 0.1 + 0.85 * (1 - exp(-L / depth_scale)) * (1 - exp(-(1 + N) / norm_scale))
/// plus noise, with L the longest input->output path through a linear
/// layer (0 if none) and N the number of norm layers. Saturating in both:
/// depth pays off only together with normalization.
class SyntheticDepthEvaluator final : public Evaluator {
 public:
  explicit SyntheticDepthEvaluator(SyntheticDepthConfig cfg) : cfg_(cfg) {}

  double score(const FeatureVector& fv) const {
    const double depth = std::max(0.0, fv.get("max_path_linear").value_or(0.0));
    const double norms = fv.get("count_norm").value_or(0.0);
    const double d = 1.0 - std::exp(-depth / cfg_.depth_scale);
    const double n = 1.0 - std::exp(-(1.0 + norms) / cfg_.norm_scale);
    return 0.1 + 0.85 * d * n;
  }

  double evaluate(const Grammar& g, const DerivationTree& t, const TensorShape& input_shape) const override {
    const auto fv = detail::try_graf(g, t, input_shape);
    if (!fv) return 0.0;
    return std::clamp(score(*fv) + detail::feature_noise(*fv, cfg_.seed, cfg_.noise), 0.0, 1.0);
  }

  nlohmann::json describe() const override {
    return {{"kind", "synthetic_depth"}, {"seed", cfg_.seed}, {"noise", cfg_.noise},
            {"depth_scale", cfg_.depth_scale}, {"norm_scale", cfg_.norm_scale}};
  }

 private:
  SyntheticDepthConfig cfg_;
};

/// Exact-match lookup of the plain encoding in a recorded dataset.
class ReplayEvaluator final : public Evaluator {
 public:
  ReplayEvaluator(std::unordered_map<std::string, double> table, std::string source)
      : table_(std::move(table)), source_(std::move(source)) {}

  double evaluate(const Grammar& g, const DerivationTree& t, const TensorShape& input_shape) const override {
    try {
      compile(g, t, input_shape);
    } catch (const ShapeError&) {
      return 0.0;
    }
    const std::string key = encode_plain(g, t).text;
    auto it = table_.find(key);
    if (it == table_.end()) throw LookupMiss("replay: no record for '" + key + "'");
    return std::clamp(it->second, 0.0, 1.0);
  }

  nlohmann::json describe() const override {
    return {{"kind", "replay"}, {"dataset", source_}, {"records", table_.size()}};
  }

 private:
  std::unordered_map<std::string, double> table_;
  std::string source_;
};

/// Runs a command per architecture: the shape-annotated encoding on stdin,
/// a single decimal number expected on stdout and exit code 0. Values
/// outside [0, 1] are clamped.
class ExternalCommandEvaluator final : public Evaluator {
 public:
  explicit ExternalCommandEvaluator(std::vector<std::string> argv,
                                    std::chrono::milliseconds timeout = std::chrono::seconds(600))
      : argv_(std::move(argv)), timeout_(timeout) {}

  double evaluate(const Grammar& g, const DerivationTree& t, const TensorShape& input_shape) const override {
    std::string encoding;
    try {
      encoding = encode_with_shapes(g, t, input_shape).text;
    } catch (const ShapeError&) {
      return 0.0;
    }
    Subprocess proc(argv_);
    proc.write_all(encoding + "\n");
    proc.close_stdin();
    const std::string out = proc.read_all(timeout_);
    if (!proc.wait_for(timeout_)) {
      proc.kill();
      throw TimeoutError("external evaluator did not exit");
    }
    if (proc.exit_code() != 0) {
      throw WorkerCrashed("external evaluator failed" + proc.diagnostics());
    }
    std::size_t used = 0;
    double v = 0.0;
    const auto first = out.find_first_not_of(" \t\r\n");
    try {
      if (first == std::string::npos) throw std::invalid_argument("empty");
      v = std::stod(out.substr(first), &used);
    } catch (const std::logic_error&) {
      throw ProtocolError("external evaluator printed a non-numeric value: '" + out.substr(0, 100) + "'");
    }
    if (out.find_first_not_of(" \t\r\n", first + used) != std::string::npos || !std::isfinite(v)) {
      throw ProtocolError("external evaluator printed a non-numeric value: '" + out.substr(0, 100) + "'");
    }
    return std::clamp(v, 0.0, 1.0);
  }

  nlohmann::json describe() const override { return {{"kind", "external_command"}, {"command", argv_}}; }

 private:
  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
};

}  // namespace snas
