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

// Regularized (aging) evolution where each iteration mutates a pool of
// candidates, ranks them with a surrogate, and truly evaluates only the
// top k.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "snas/compiler.hpp"
#include "snas/encoder.hpp"
#include "snas/error.hpp"
#include "snas/evaluator.hpp"
#include "snas/features.hpp"
#include "snas/grammar.hpp"
#include "snas/surrogate.hpp"

namespace snas {

enum class SurrogateKind : std::uint8_t { None, Forest, External };
enum class SearchMode : std::uint8_t { Standard, SurrogateAsObjective };

inline constexpr std::size_t kForestRefitInterval = 20;
inline constexpr std::size_t kExternalRefitInterval = 100;

/// Dataset tag given to rows produced by the running search.
inline constexpr const char* kCurrentRunTag = "current";

struct SearchConfig {
  std::size_t population_size = 100;
  std::size_t n_candidates = 20;
  std::size_t k = 5;
  std::size_t tournament_size = 10;
  std::size_t iterations = 300;
  /// 0 picks the surrogate's default (20 for forest, 100 for external).
  std::size_t refit_interval = 0;
  SurrogateKind surrogate = SurrogateKind::Forest;
  SearchMode mode = SearchMode::Standard;
  std::size_t k_final = 5;
  std::uint64_t seed = 0;
  std::size_t max_depth = kDefaultMaxDepth;
  std::size_t mutation_retries = kDefaultMutationRetries;
  TensorShape input_shape = TensorShape::im(3, 32, 32);
  /// Encoding handed to string surrogates.
  EncodingVariant surrogate_encoding = EncodingVariant::WithShapes;
  /// Prefer offspring not yet evaluated in this run when choosing the k to evaluate.
  bool skip_evaluated = true;

  std::size_t effective_refit_interval() const {
    if (refit_interval != 0) return refit_interval;
    return surrogate == SurrogateKind::External ? kExternalRefitInterval : kForestRefitInterval;
  }

  void validate() const {
    if (population_size == 0) throw ConfigError("search.population_size", "must be positive");
    if (n_candidates == 0) throw ConfigError("search.n_candidates", "must be positive");
    if (k == 0 || k > n_candidates) throw ConfigError("search.k", "must satisfy 1 <= k <= n_candidates");
    if (tournament_size == 0 || tournament_size > population_size) {
      throw ConfigError("search.tournament_size", "must satisfy 1 <= tournament_size <= population_size");
    }
    if (max_depth == 0) throw ConfigError("search.max_depth", "must be positive");
    if (!input_shape.valid()) throw ConfigError("search.input_shape", "invalid shape");
    if (mode == SearchMode::SurrogateAsObjective) {
      if (surrogate == SurrogateKind::None) {
        throw ConfigError("search.mode", "surrogate_as_objective requires a surrogate");
      }
      if (k_final == 0) throw ConfigError("search.k_final", "must be positive");
    }
  }
};

struct Individual {
  DerivationTree tree;
  std::string encoding;
  std::optional<FeatureVector> features;  // empty when the tree does not compile
  std::string surrogate_encoding;
  std::optional<double> accuracy;
  std::optional<double> prediction;
  std::uint64_t birth_index = 0;

  /// Selection fitness: the true accuracy when known, else the prediction.
  double fitness() const { return accuracy.value_or(prediction.value_or(0.0)); }
  bool compiles() const { return features.has_value(); }
};

/// Fixed-capacity FIFO of individuals, oldest first.
class Population {
 public:
  explicit Population(std::size_t capacity) : capacity_(capacity) {}

  /// Adds `ind`, evicting the oldest member when over capacity.
  void add(Individual ind) {
    members_.push_back(std::move(ind));
    while (members_.size() > capacity_) members_.pop_front();
  }

  std::size_t size() const { return members_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return members_.empty(); }
  const Individual& operator[](std::size_t i) const { return members_[i]; }
  const std::deque<Individual>& members() const { return members_; }

 private:
  std::size_t capacity_;
  std::deque<Individual> members_;
};

/// Uniform subset of min(tau, |pop|) distinct members; the fittest wins,
/// ties going to the older (lower birth_index) member.
inline const Individual& tournament_select(const Population& pop, std::size_t tau, Rng& rng) {
  if (pop.empty()) throw ValidationError("tournament on an empty population");
  const std::size_t m = std::min(tau, pop.size());
  std::vector<std::size_t> idx(pop.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, idx.size() - 1);
    std::swap(idx[i], idx[d(rng)]);
  }
  const Individual* best = &pop[idx[0]];
  for (std::size_t i = 1; i < m; ++i) {
    const Individual& c = pop[idx[i]];
    if (c.fitness() > best->fitness() ||
        (c.fitness() == best->fitness() && c.birth_index < best->birth_index)) {
      best = &c;
    }
  }
  return *best;
}

struct CandidateRecord {
  std::string encoding;
  std::optional<double> prediction;
};

struct IterationRecord {
  std::size_t iter = 0;
  std::vector<CandidateRecord> candidates;
  std::vector<std::string> accepted;
  std::vector<std::pair<std::string, double>> evaluated;
  double best = 0.0;
};

inline nlohmann::json to_json(const IterationRecord& r) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"encoding", c.encoding},
                     {"prediction", c.prediction ? nlohmann::json(*c.prediction) : nlohmann::json(nullptr)}});
  }
  nlohmann::json evaluated = nlohmann::json::array();
  for (const auto& [enc, acc] : r.evaluated) evaluated.push_back({{"encoding", enc}, {"accuracy", acc}});
  return {{"iter", r.iter}, {"candidates", cands}, {"accepted", r.accepted},
          {"evaluated", evaluated}, {"best", r.best}};
}

struct SearchResult {
  /// Initial population with its (true or predicted) fitness.
  std::vector<std::pair<std::string, double>> initial;
  std::vector<IterationRecord> iterations;
  /// Final shortlist truly evaluated in surrogate-as-objective mode.
  std::vector<std::pair<std::string, double>> final_evaluations;
  DerivationTree best_tree;
  std::string best_encoding;
  double best_fitness = 0.0;
  std::size_t true_evaluations = 0;
  std::vector<std::string> incidents;
};

/// Transfer rows from other datasets used to warm-start the surrogate.
struct WarmStart {
  TrainingSet rows;
  NormalizationMethod normalization = NormalizationMethod::Percentile;
};

/// Merges transfer rows with the current run's rows, normalizing targets per
/// dataset tag when transfer rows are present.
inline TrainingSet merge_training_rows(const std::optional<WarmStart>& warm, const TrainingSet& current) {
  if (!warm || warm->rows.empty()) return current;
  TrainingSet merged = warm->rows;
  merged.append(current);
  const Normalizer nrm = fit_normalizer(merged, warm->normalization);
  return normalize(nrm, std::move(merged));
}

/// Fits `surrogate` on the normalized transfer rows alone.
inline void warm_start(Surrogate& surrogate, const WarmStart& warm) {
  if (warm.rows.empty()) throw ValidationError("warm start needs transfer rows");
  surrogate.fit(merge_training_rows(warm, {}));
}

class Search {
 public:
  using IterationCallback = std::function<void(const IterationRecord&)>;

  Search(SearchConfig cfg, const Grammar& g, const Evaluator& evaluator, Surrogate* surrogate,
         std::optional<WarmStart> warm = std::nullopt)
      : cfg_(std::move(cfg)), grammar_(g), evaluator_(evaluator), surrogate_(surrogate),
        warm_(std::move(warm)), rng_(cfg_.seed), population_(cfg_.population_size) {
    cfg_.validate();
    if (cfg_.surrogate != SurrogateKind::None && surrogate_ == nullptr) {
      throw ConfigError("search.surrogate", "surrogate kind set but no surrogate supplied");
    }
    if (cfg_.surrogate == SurrogateKind::None) surrogate_ = nullptr;
  }

  SearchResult run(const IterationCallback& on_iteration = {}) {
    if (surrogate_ != nullptr && warm_ && !warm_->rows.empty()) warm_start(*surrogate_, *warm_);
    if (cfg_.mode == SearchMode::SurrogateAsObjective) {
      if (surrogate_ == nullptr || !surrogate_->fitted()) {
        throw ConfigError("search.warm_start", "surrogate_as_objective needs a warm-started surrogate");
      }
      return run_objective(on_iteration);
    }
    return run_standard(on_iteration);
  }

 private:
  Individual make_individual(DerivationTree tree) {
    Individual ind;
    ind.encoding = encode_plain(grammar_, tree).text;
    ind.surrogate_encoding = ind.encoding;
    try {
      const ArchGraph graph = compile(grammar_, tree, cfg_.input_shape);
      ind.features = extract_graf(graph);
      if (cfg_.surrogate_encoding == EncodingVariant::WithShapes) {
        ind.surrogate_encoding = encode_with_shapes(grammar_, tree, cfg_.input_shape).text;
      }
    } catch (const ShapeError&) {
    }
    ind.tree = std::move(tree);
    return ind;
  }

  Individual sample_valid() {
    Individual ind;
    for (std::size_t attempt = 0; attempt < std::max<std::size_t>(cfg_.mutation_retries, 1); ++attempt) {
      ind = make_individual(sample_tree(grammar_, cfg_.max_depth, rng_));
      if (ind.compiles()) break;
    }
    return ind;
  }

  Individual offspring() {
    const Individual& parent = tournament_select(population_, cfg_.tournament_size, rng_);
    const DerivationTree parent_tree = parent.tree;
    Individual child;
    for (std::size_t attempt = 0; attempt < std::max<std::size_t>(cfg_.mutation_retries, 1); ++attempt) {
      child = make_individual(mutate_subtree(grammar_, parent_tree, cfg_.max_depth, rng_));
      if (child.compiles()) break;
    }
    return child;
  }

  double true_evaluate(const Individual& ind) {
    ++true_evaluations_;
    if (!ind.compiles()) return 0.0;
    try {
      return evaluator_.evaluate(grammar_, ind.tree, cfg_.input_shape);
    } catch (const Error& e) {
      incidents_.push_back("evaluation of '" + ind.encoding + "' failed: " + e.what());
      return 0.0;
    }
  }

  // Non-compiling candidates are predicted 0 without consulting the model.
  std::vector<double> predict(const std::vector<Individual>& pool) {
    std::vector<double> out(pool.size(), 0.0);
    std::vector<SurrogateInput> inputs;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!pool[i].compiles()) continue;
      inputs.push_back({pool[i].features, pool[i].surrogate_encoding});
      where.push_back(i);
    }
    if (inputs.empty()) return out;
    try {
      const auto preds = surrogate_->predict(inputs);
      for (std::size_t j = 0; j < where.size(); ++j) out[where[j]] = preds[j];
    } catch (const Error& e) {
      incidents_.push_back(std::string("surrogate prediction failed: ") + e.what());
    }
    return out;
  }

  void refit() {
    try {
      surrogate_->fit(merge_training_rows(warm_, history_));
    } catch (const Error& e) {
      incidents_.push_back(std::string("surrogate refit failed: ") + e.what());
    }
  }

  void record_history(const Individual& ind) {
    TrainingRow row{ind.features, ind.surrogate_encoding, *ind.accuracy, kCurrentRunTag};
    history_.rows.push_back(std::move(row));
    evaluated_.insert(ind.encoding);
  }

  // Top-k indices by prediction among `idx`, ties to the earlier candidate.
  std::vector<std::size_t> top_k(std::vector<std::size_t> idx, const std::vector<double>& preds,
                                 std::size_t k) const {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return preds[a] > preds[b]; });
    idx.resize(std::min(k, idx.size()));
    return idx;
  }

  std::vector<std::size_t> random_k(std::vector<std::size_t> idx, std::size_t k) {
    const std::size_t m = std::min(k, idx.size());
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, idx.size() - 1);
      std::swap(idx[i], idx[d(rng_)]);
    }
    idx.resize(m);
    return idx;
  }

  // Picks the k pool members to evaluate. With skip_evaluated, offspring whose
  // encoding was already evaluated (or repeats an earlier pool member) are
  // only used to fill up when fewer than k fresh ones exist.
  std::vector<std::size_t> choose(const std::vector<Individual>& pool, const std::vector<double>* preds) {
    std::vector<std::size_t> fresh, stale;
    std::unordered_set<std::string> in_pool;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      const bool repeat = !in_pool.insert(pool[j].encoding).second || evaluated_.contains(pool[j].encoding);
      (cfg_.skip_evaluated && repeat ? stale : fresh).push_back(j);
    }
    auto pick = [&](const std::vector<std::size_t>& idx, std::size_t k) {
      return preds != nullptr ? top_k(idx, *preds, k) : random_k(idx, k);
    };
    auto chosen = pick(fresh, cfg_.k);
    if (chosen.size() < cfg_.k) {
      for (std::size_t j : pick(stale, cfg_.k - chosen.size())) chosen.push_back(j);
    }
    return chosen;
  }

  SearchResult run_standard(const IterationCallback& on_iteration) {
    SearchResult result;
    double best = -1.0;
    auto consider = [&](const Individual& ind) {
      if (*ind.accuracy > best) {
        best = *ind.accuracy;
        result.best_tree = ind.tree;
        result.best_encoding = ind.encoding;
      }
    };
    for (std::size_t i = 0; i < cfg_.population_size; ++i) {
      Individual ind = sample_valid();
      ind.accuracy = true_evaluate(ind);
      ind.birth_index = next_birth_++;
      result.initial.emplace_back(ind.encoding, *ind.accuracy);
      record_history(ind);
      consider(ind);
      population_.add(std::move(ind));
    }
    if (surrogate_ != nullptr) refit();

    const std::size_t refit_every = cfg_.effective_refit_interval();
    for (std::size_t it = 1; it <= cfg_.iterations; ++it) {
      IterationRecord rec;
      rec.iter = it;
      std::vector<Individual> pool;
      pool.reserve(cfg_.n_candidates);
      for (std::size_t j = 0; j < cfg_.n_candidates; ++j) pool.push_back(offspring());

      std::vector<std::size_t> chosen;
      if (surrogate_ != nullptr) {
        const auto preds = predict(pool);
        for (std::size_t j = 0; j < pool.size(); ++j) pool[j].prediction = preds[j];
        chosen = choose(pool, &preds);
      } else {
        chosen = choose(pool, nullptr);
      }
      for (const auto& c : pool) rec.candidates.push_back({c.encoding, c.prediction});

      for (std::size_t j : chosen) {
        Individual child = pool[j];
        child.accuracy = true_evaluate(child);
        child.birth_index = next_birth_++;
        rec.accepted.push_back(child.encoding);
        rec.evaluated.emplace_back(child.encoding, *child.accuracy);
        record_history(child);
        consider(child);
        population_.add(std::move(child));
      }
      rec.best = best;
      if (surrogate_ != nullptr && it % refit_every == 0) refit();
      if (on_iteration) on_iteration(rec);
      result.iterations.push_back(std::move(rec));
    }
    result.best_fitness = best;
    result.true_evaluations = true_evaluations_;
    result.incidents = incidents_;
    return result;
  }

  SearchResult run_objective(const IterationCallback& on_iteration) {
    SearchResult result;
    std::vector<Individual> seen;
    double best = -1.0;

    std::vector<Individual> init;
    for (std::size_t i = 0; i < cfg_.population_size; ++i) init.push_back(sample_valid());
    const auto init_preds = predict(init);
    for (std::size_t i = 0; i < init.size(); ++i) {
      init[i].prediction = init_preds[i];
      init[i].birth_index = next_birth_++;
      result.initial.emplace_back(init[i].encoding, init_preds[i]);
      best = std::max(best, init_preds[i]);
      seen.push_back(init[i]);
      population_.add(std::move(init[i]));
    }

    for (std::size_t it = 1; it <= cfg_.iterations; ++it) {
      IterationRecord rec;
      rec.iter = it;
      std::vector<Individual> pool;
      for (std::size_t j = 0; j < cfg_.n_candidates; ++j) pool.push_back(offspring());
      const auto preds = predict(pool);
      for (std::size_t j = 0; j < pool.size(); ++j) {
        pool[j].prediction = preds[j];
        rec.candidates.push_back({pool[j].encoding, preds[j]});
      }
      std::vector<std::size_t> all(pool.size());
      std::iota(all.begin(), all.end(), 0);
      for (std::size_t j : top_k(all, preds, cfg_.k)) {
        Individual child = pool[j];
        child.birth_index = next_birth_++;
        rec.accepted.push_back(child.encoding);
        best = std::max(best, *child.prediction);
        seen.push_back(child);
        population_.add(std::move(child));
      }
      rec.best = best;
      if (on_iteration) on_iteration(rec);
      result.iterations.push_back(std::move(rec));
    }

    // Shortlist: best predicted distinct architectures over the whole run.
    std::stable_sort(seen.begin(), seen.end(), [](const Individual& a, const Individual& b) {
      return *a.prediction > *b.prediction;
    });
    std::vector<std::string> taken;
    double best_true = -1.0;
    for (const auto& ind : seen) {
      if (taken.size() >= cfg_.k_final) break;
      if (std::find(taken.begin(), taken.end(), ind.encoding) != taken.end()) continue;
      taken.push_back(ind.encoding);
      const double acc = true_evaluate(ind);
      result.final_evaluations.emplace_back(ind.encoding, acc);
      if (acc > best_true) {
        best_true = acc;
        result.best_tree = ind.tree;
        result.best_encoding = ind.encoding;
      }
    }
    result.best_fitness = best_true;
    result.true_evaluations = true_evaluations_;
    result.incidents = incidents_;
    return result;
  }

  SearchConfig cfg_;
  const Grammar& grammar_;
  const Evaluator& evaluator_;
  Surrogate* surrogate_;
  std::optional<WarmStart> warm_;
  Rng rng_;
  Population population_;
  TrainingSet history_;
  std::unordered_set<std::string> evaluated_;
  std::uint64_t next_birth_ = 0;
  std::size_t true_evaluations_ = 0;
  std::vector<std::string> incidents_;
};

/// Runs one search. `surrogate` may be null when cfg.surrogate is None.
inline SearchResult run_search(const SearchConfig& cfg, const Grammar& g, const Evaluator& evaluator,
                               Surrogate* surrogate, std::optional<WarmStart> warm = std::nullopt,
                               const Search::IterationCallback& on_iteration = {}) {
  return Search(cfg, g, evaluator, surrogate, std::move(warm)).run(on_iteration);
}

inline nlohmann::json summary_json(const SearchResult& r) {
  nlohmann::json finals = nlohmann::json::array();
  for (const auto& [enc, acc] : r.final_evaluations) finals.push_back({{"encoding", enc}, {"accuracy", acc}});
  return {{"best_encoding", r.best_encoding},
          {"best_fitness", r.best_fitness},
          {"iterations", r.iterations.size()},
          {"true_evaluations", r.true_evaluations},
          {"final_evaluations", finals},
          {"incidents", r.incidents}};
}

}  // namespace snas
