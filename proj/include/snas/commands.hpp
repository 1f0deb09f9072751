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

// Implementations behind the `snas` command-line tool. Each command takes
// already-parsed options, so tests can drive them in-process.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "snas/augment.hpp"
#include "snas/compiler.hpp"
#include "snas/dataset.hpp"
#include "snas/default_grammar.hpp"
#include "snas/encoder.hpp"
#include "snas/error.hpp"
#include "snas/evaluator.hpp"
#include "snas/evolution.hpp"
#include "snas/features.hpp"
#include "snas/forest.hpp"
#include "snas/grammar.hpp"
#include "snas/metrics.hpp"
#include "snas/surrogate.hpp"

namespace snas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char* kToolVersion = "0.1.0";

/// Grammar from a file, or the built-in default when `path` is empty.
inline Grammar load_grammar_or_default(const std::string& path) {
  if (path.empty()) return default_grammar();
  return load_grammar(read_text_file(path));
}

inline TensorShape shape_from_dims(const std::vector<std::int64_t>& dims, const std::string& field) {
  TensorShape s;
  if (dims.size() == 3) {
    s = TensorShape::im(dims[0], dims[1], dims[2]);
  } else if (dims.size() == 2) {
    s = TensorShape::col(dims[0], dims[1]);
  } else {
    throw ConfigError(field, "expected [C, H, W] or [S, D]");
  }
  if (!s.valid()) throw ConfigError(field, "dimensions must be positive");
  return s;
}

// ---------------------------------------------------------------------------
// Search configuration

namespace detail {

// Typed field access with dotted paths in error messages.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "must be an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key) && !j_[key].is_null(); }

  const nlohmann::json& raw(const std::string& key) const { return j_[key]; }

  void only(const std::set<std::string>& allowed) const {
    for (const auto& [k, _] : j_.items()) {
      if (allowed.count(k) == 0) throw ConfigError(field(k), "unknown field");
    }
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    if (!j_[key].is_number_integer() || j_[key].get<std::int64_t>() < 0) {
      throw ConfigError(field(key), "must be a non-negative integer");
    }
    return j_[key].get<std::size_t>();
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    if (!j_[key].is_number_integer() || j_[key].get<std::int64_t>() < 0) {
      throw ConfigError(field(key), "must be a non-negative integer");
    }
    return j_[key].get<std::uint64_t>();
  }

  double real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    if (!j_[key].is_number()) throw ConfigError(field(key), "must be a number");
    return j_[key].get<double>();
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_[key].is_boolean()) throw ConfigError(field(key), "must be a boolean");
    return j_[key].get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!j_[key].is_string()) throw ConfigError(field(key), "must be a string");
    return j_[key].get<std::string>();
  }

  std::vector<std::string> strings(const std::string& key) const {
    if (!has(key)) return {};
    if (!j_[key].is_array()) throw ConfigError(field(key), "must be a list of strings");
    std::vector<std::string> out;
    for (const auto& v : j_[key]) {
      if (!v.is_string()) throw ConfigError(field(key), "must be a list of strings");
      out.push_back(v.get<std::string>());
    }
    return out;
  }

  std::vector<std::int64_t> ints(const std::string& key, std::vector<std::int64_t> fallback) const {
    if (!has(key)) return fallback;
    if (!j_[key].is_array()) throw ConfigError(field(key), "must be a list of integers");
    std::vector<std::int64_t> out;
    for (const auto& v : j_[key]) {
      if (!v.is_number_integer()) throw ConfigError(field(key), "must be a list of integers");
      out.push_back(v.get<std::int64_t>());
    }
    return out;
  }

  ConfigReader child(const std::string& key) const {
    static const nlohmann::json kEmpty = nlohmann::json::object();
    return ConfigReader(has(key) ? j_[key] : kEmpty, field(key));
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
};

}  // namespace detail

struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::Forest;
  ForestParams forest;
  bool drop_zero = false;
  std::vector<std::string> command;
  BridgeTimeouts timeouts;
};

struct EvaluatorSpec {
  std::string kind = "synthetic_linear";
  SyntheticLinearConfig linear;
  SyntheticDepthConfig depth;
  std::string dataset;
  std::vector<std::string> command;
  std::chrono::milliseconds timeout{600'000};
};

struct WarmStartSpec {
  std::vector<std::string> datasets;
  NormalizationMethod normalization = NormalizationMethod::Percentile;
};

/// Fully resolved `search` configuration.
struct RunConfig {
  std::string grammar_path;
  SearchConfig search;
  SurrogateSpec surrogate;
  EvaluatorSpec evaluator;
  std::optional<WarmStartSpec> warm_start;
};

inline RunConfig parse_run_config(const nlohmann::json& doc) {
  using detail::ConfigReader;
  ConfigReader root(doc, "");
  root.only({"seed", "grammar", "input_shape", "max_depth", "search", "surrogate", "evaluator", "warm_start"});
  RunConfig rc;
  rc.grammar_path = root.text("grammar", "");
  SearchConfig& s = rc.search;
  s.seed = root.seed("seed", 0);
  s.max_depth = root.count("max_depth", kDefaultMaxDepth);
  s.input_shape = shape_from_dims(root.ints("input_shape", {3, 32, 32}), "input_shape");

  const auto sr = root.child("search");
  sr.only({"population_size", "n_candidates", "k", "tournament_size", "iterations", "refit_interval",
           "mode", "k_final", "mutation_retries", "surrogate_encoding", "skip_evaluated"});
  s.population_size = sr.count("population_size", s.population_size);
  s.n_candidates = sr.count("n_candidates", s.n_candidates);
  s.k = sr.count("k", s.k);
  s.tournament_size = sr.count("tournament_size", s.tournament_size);
  s.iterations = sr.count("iterations", s.iterations);
  s.refit_interval = sr.count("refit_interval", 0);
  s.k_final = sr.count("k_final", s.k_final);
  s.mutation_retries = sr.count("mutation_retries", s.mutation_retries);
  s.skip_evaluated = sr.flag("skip_evaluated", s.skip_evaluated);
  const auto mode = sr.text("mode", "standard");
  if (mode == "standard") {
    s.mode = SearchMode::Standard;
  } else if (mode == "surrogate_as_objective") {
    s.mode = SearchMode::SurrogateAsObjective;
  } else {
    throw ConfigError(sr.field("mode"), "expected 'standard' or 'surrogate_as_objective'");
  }
  const auto enc = sr.text("surrogate_encoding", "with_shapes");
  if (enc != "plain" && enc != "with_shapes") {
    throw ConfigError(sr.field("surrogate_encoding"), "expected 'plain' or 'with_shapes'");
  }
  s.surrogate_encoding = enc == "plain" ? EncodingVariant::Plain : EncodingVariant::WithShapes;

  const auto su = root.child("surrogate");
  su.only({"kind", "n_trees", "min_samples_leaf", "drop_zero", "command", "fit_timeout_s", "predict_timeout_s"});
  const auto kind = su.text("kind", "forest");
  if (kind == "none") {
    rc.surrogate.kind = SurrogateKind::None;
  } else if (kind == "forest") {
    rc.surrogate.kind = SurrogateKind::Forest;
  } else if (kind == "external") {
    rc.surrogate.kind = SurrogateKind::External;
  } else {
    throw ConfigError(su.field("kind"), "expected 'none', 'forest' or 'external'");
  }
  rc.surrogate.forest.n_trees = su.count("n_trees", 100);
  rc.surrogate.forest.min_samples_leaf = su.count("min_samples_leaf", 1);
  if (rc.surrogate.forest.n_trees == 0) throw ConfigError(su.field("n_trees"), "must be positive");
  if (rc.surrogate.forest.min_samples_leaf == 0) {
    throw ConfigError(su.field("min_samples_leaf"), "must be positive");
  }
  rc.surrogate.drop_zero = su.flag("drop_zero", false);
  rc.surrogate.command = su.strings("command");
  rc.surrogate.timeouts.fit = std::chrono::milliseconds(
      static_cast<std::int64_t>(1000 * su.real("fit_timeout_s", 600.0)));
  rc.surrogate.timeouts.predict = std::chrono::milliseconds(
      static_cast<std::int64_t>(1000 * su.real("predict_timeout_s", 60.0)));
  if (rc.surrogate.kind == SurrogateKind::External && rc.surrogate.command.empty() &&
      std::getenv(kBridgeWorkerEnv) == nullptr) {
    throw ConfigError(su.field("command"), "external surrogate needs a worker command");
  }
  s.surrogate = rc.surrogate.kind;

  const auto ev = root.child("evaluator");
  auto& e = rc.evaluator;
  e.kind = ev.text("kind", "synthetic_linear");
  if (e.kind == "synthetic_linear") {
    ev.only({"kind", "seed", "noise", "gain", "bias", "sign", "reference_seed", "reference_samples"});
    e.linear.seed = ev.seed("seed", 0);
    e.linear.noise = ev.real("noise", e.linear.noise);
    e.linear.gain = ev.real("gain", e.linear.gain);
    e.linear.bias = ev.real("bias", e.linear.bias);
    e.linear.sign = ev.real("sign", e.linear.sign);
    e.linear.reference_seed = ev.seed("reference_seed", e.linear.reference_seed);
    e.linear.reference_samples = ev.count("reference_samples", e.linear.reference_samples);
    e.linear.max_depth = s.max_depth;
  } else if (e.kind == "synthetic_depth") {
    ev.only({"kind", "seed", "noise", "depth_scale", "norm_scale"});
    e.depth.seed = ev.seed("seed", 0);
    e.depth.noise = ev.real("noise", e.depth.noise);
    e.depth.depth_scale = ev.real("depth_scale", e.depth.depth_scale);
    e.depth.norm_scale = ev.real("norm_scale", e.depth.norm_scale);
  } else if (e.kind == "replay") {
    ev.only({"kind", "dataset"});
    e.dataset = ev.text("dataset", "");
    if (e.dataset.empty()) throw ConfigError(ev.field("dataset"), "replay needs a dataset file");
  } else if (e.kind == "external_command") {
    ev.only({"kind", "command", "timeout_s"});
    e.command = ev.strings("command");
    if (e.command.empty()) throw ConfigError(ev.field("command"), "needs a command line");
    e.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(1000 * ev.real("timeout_s", 600.0)));
  } else {
    throw ConfigError(ev.field("kind"),
                      "expected 'synthetic_linear', 'synthetic_depth', 'replay' or 'external_command'");
  }

  if (root.has("warm_start")) {
    const auto ws = root.child("warm_start");
    ws.only({"datasets", "normalization"});
    WarmStartSpec w;
    w.datasets = ws.strings("datasets");
    if (w.datasets.empty()) throw ConfigError(ws.field("datasets"), "needs at least one dataset file");
    const auto norm = parse_normalization(ws.text("normalization", "percentile"));
    if (!norm) throw ConfigError(ws.field("normalization"), "expected 'none', 'minmax' or 'percentile'");
    w.normalization = *norm;
    rc.warm_start = std::move(w);
  }

  s.validate();
  if (s.mode == SearchMode::SurrogateAsObjective && !rc.warm_start) {
    throw ConfigError("warm_start", "surrogate_as_objective needs warm-start datasets");
  }
  return rc;
}

inline std::unique_ptr<Evaluator> make_evaluator(const EvaluatorSpec& spec, const Grammar& g,
                                                 const TensorShape& input_shape) {
  if (spec.kind == "synthetic_linear") return std::make_unique<SyntheticLinearEvaluator>(g, input_shape, spec.linear);
  if (spec.kind == "synthetic_depth") return std::make_unique<SyntheticDepthEvaluator>(spec.depth);
  if (spec.kind == "replay") {
    std::unordered_map<std::string, double> table;
    for (const auto& row : read_dataset_file(spec.dataset)) {
      table[encode_plain(g, parse(g, row.encoding)).text] = row.accuracy;
    }
    return std::make_unique<ReplayEvaluator>(std::move(table), spec.dataset);
  }
  return std::make_unique<ExternalCommandEvaluator>(spec.command, spec.timeout);
}

inline std::unique_ptr<Surrogate> make_surrogate(const SurrogateSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case SurrogateKind::None: return nullptr;
    case SurrogateKind::Forest:
      return std::make_unique<ForestSurrogate>(ForestSurrogateConfig{spec.forest, seed, spec.drop_zero});
    case SurrogateKind::External: return std::make_unique<ExternalSurrogate>(spec.command, spec.timeouts);
  }
  return nullptr;
}

inline TrainingSet load_training_files(const Grammar& g, const std::vector<std::string>& files,
                                       const TensorShape& input_shape, EncodingVariant variant) {
  TrainingSet out;
  for (const auto& f : files) out.append(to_training_set(g, read_dataset_file(f), input_shape, variant));
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Runs a search and writes `log.jsonl`, `initial.jsonl`, `summary.json` and
/// `manifest.json` into `out_dir`. Everything except the manifest's
/// `created` field is a pure function of the manifest.
inline SearchResult cmd_search(const nlohmann::json& config_doc, const std::filesystem::path& out_dir) {
  const RunConfig rc = parse_run_config(config_doc);
  const Grammar g = load_grammar_or_default(rc.grammar_path);
  const auto evaluator = make_evaluator(rc.evaluator, g, rc.search.input_shape);
  const auto surrogate = make_surrogate(rc.surrogate, rc.search.seed);
  std::optional<WarmStart> warm;
  if (rc.warm_start) {
    warm = WarmStart{load_training_files(g, rc.warm_start->datasets, rc.search.input_shape,
                                         rc.search.surrogate_encoding),
                     rc.warm_start->normalization};
  }

  std::filesystem::create_directories(out_dir);
  nlohmann::json manifest{{"tool", "snas"},
                          {"version", kToolVersion},
                          {"created", utc_timestamp()},
                          {"config", config_doc},
                          {"grammar", rc.grammar_path.empty() ? "builtin:mini_einspace" : rc.grammar_path},
                          {"seed", rc.search.seed},
                          {"evaluator", evaluator->describe()}};
  {
    PartialFile mf(out_dir / "manifest.json");
    mf.stream() << manifest.dump(2) << "\n";
    mf.commit();
  }

  PartialFile log(out_dir / "log.jsonl");
  const auto result = run_search(rc.search, g, *evaluator, surrogate.get(), std::move(warm),
                                 [&](const IterationRecord& r) { log.stream() << to_json(r).dump() << "\n"; });
  log.commit();

  PartialFile init(out_dir / "initial.jsonl");
  for (const auto& [enc, fit] : result.initial) {
    init.stream() << nlohmann::json{{"encoding", enc}, {"fitness", fit}}.dump() << "\n";
  }
  init.commit();

  PartialFile summary(out_dir / "summary.json");
  summary.stream() << summary_json(result).dump(2) << "\n";
  summary.commit();
  return result;
}

// ---------------------------------------------------------------------------
// Correlation evaluation

struct CorrelationOptions {
  std::vector<std::string> train_files;
  std::string test_file;  // empty: IID split of the training rows
  std::string grammar_path;
  TensorShape input_shape = TensorShape::im(3, 32, 32);
  SurrogateSpec surrogate;
  NormalizationMethod normalization = NormalizationMethod::None;
  std::optional<std::size_t> train_prefix;
  std::optional<std::size_t> eval_window;
  std::optional<std::size_t> refit_every;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> fit_and_predict(const CorrelationOptions& opt, const TrainingSet& train,
                                           const TrainingSet& test) {
  const Normalizer nrm = fit_normalizer(train, opt.normalization);
  const TrainingSet fit_rows = normalize(nrm, train);
  auto surrogate = make_surrogate(opt.surrogate, opt.seed);
  if (!surrogate) throw ConfigError("surrogate", "correlation evaluation needs a surrogate");
  surrogate->fit(fit_rows);
  // Rows that do not compile have no features; they are predicted 0.
  std::vector<double> out(test.size(), 0.0);
  std::vector<SurrogateInput> inputs;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (opt.surrogate.kind == SurrogateKind::Forest && !test.rows[i].features) continue;
    inputs.push_back({test.rows[i].features, test.rows[i].encoding});
    where.push_back(i);
  }
  if (!inputs.empty()) {
    const auto preds = surrogate->predict(inputs);
    for (std::size_t j = 0; j < where.size(); ++j) out[where[j]] = preds[j];
  }
  return out;
}

inline nlohmann::json report_json(const CorrelationReport& r, std::size_t train_rows) {
  auto j = to_json(r);
  j["train_rows"] = train_rows;
  return j;
}

inline TrainingSet slice(const TrainingSet& s, std::size_t begin, std::size_t end) {
  TrainingSet out;
  out.rows.assign(s.rows.begin() + static_cast<std::ptrdiff_t>(begin),
                  s.rows.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

}  // namespace detail

/// Fits on the training rows and reports rank correlation on the test rows.
/// Without a test file the training rows are split in order: the first
/// `train_prefix` rows train, the next `eval_window` rows evaluate. With
/// `refit_every` the split slides forward by that many rows per window.
inline nlohmann::json cmd_eval_correlation(const CorrelationOptions& opt) {
  if (opt.train_files.empty()) throw ConfigError("train", "at least one training file is required");
  const Grammar g = load_grammar_or_default(opt.grammar_path);
  const TrainingSet all = load_training_files(g, opt.train_files, opt.input_shape, EncodingVariant::WithShapes);

  auto evaluate = [&](const TrainingSet& train, const TrainingSet& test) {
    if (train.size() < 2) throw ValidationError("training split has fewer than two rows");
    if (test.size() < 2) throw ValidationError("evaluation split has fewer than two rows");
    const auto preds = detail::fit_and_predict(opt, train, test);
    const auto actual = test.targets();
    return correlation_report(preds, actual);
  };

  if (!opt.test_file.empty()) {
    const TrainingSet test = load_training_files(g, {opt.test_file}, opt.input_shape, EncodingVariant::WithShapes);
    return detail::report_json(evaluate(all, test), all.size());
  }

  const std::size_t n = all.size();
  const std::size_t prefix = opt.train_prefix.value_or(n - n / 5);
  if (prefix >= n) throw ConfigError("train-prefix", "leaves no rows to evaluate");
  if (!opt.refit_every) {
    const std::size_t window = std::min(opt.eval_window.value_or(n - prefix), n - prefix);
    return detail::report_json(
        evaluate(detail::slice(all, 0, prefix), detail::slice(all, prefix, prefix + window)), prefix);
  }
  const std::size_t step = *opt.refit_every;
  if (step == 0) throw ConfigError("refit-every", "must be positive");
  nlohmann::json windows = nlohmann::json::array();
  for (std::size_t start = prefix; start + 2 <= n; start += step) {
    const std::size_t end = std::min(start + opt.eval_window.value_or(step), n);
    windows.push_back(detail::report_json(
        evaluate(detail::slice(all, 0, start), detail::slice(all, start, end)), start));
  }
  return {{"windows", windows}};
}

struct TransferOptions {
  std::vector<std::string> data_files;
  std::string grammar_path;
  TensorShape input_shape = TensorShape::im(3, 32, 32);
  SurrogateSpec surrogate;
  NormalizationMethod normalization = NormalizationMethod::Percentile;
  std::uint64_t seed = 0;
};

/// Leave-one-dataset-out: for every dataset tag, fit on all other datasets
/// (normalized per dataset) and report correlation on the held-out one.
inline nlohmann::json cmd_transfer_eval(const TransferOptions& opt) {
  const Grammar g = load_grammar_or_default(opt.grammar_path);
  const TrainingSet all = load_training_files(g, opt.data_files, opt.input_shape, EncodingVariant::WithShapes);
  std::vector<std::string> tags;
  for (const auto& r : all.rows) {
    if (std::find(tags.begin(), tags.end(), r.dataset) == tags.end()) tags.push_back(r.dataset);
  }
  if (tags.size() < 2) throw ValidationError("transfer evaluation needs at least two datasets");
  CorrelationOptions copt;
  copt.surrogate = opt.surrogate;
  copt.normalization = opt.normalization;
  copt.seed = opt.seed;
  nlohmann::json holdouts = nlohmann::json::array();
  for (const auto& tag : tags) {
    TrainingSet train, test;
    for (const auto& r : all.rows) (r.dataset == tag ? test : train).rows.push_back(r);
    if (test.size() < 2) throw ValidationError("dataset '" + tag + "' has fewer than two rows");
    const auto preds = detail::fit_and_predict(copt, train, test);
    auto j = detail::report_json(correlation_report(preds, test.targets()), train.size());
    j["dataset"] = tag;
    holdouts.push_back(j);
  }
  return {{"normalization", std::string(normalization_name(opt.normalization))}, {"holdouts", holdouts}};
}

// ---------------------------------------------------------------------------
// Dataset utilities

/// Streams the augmented dataset: every original row followed by its
/// variants. Extra feature columns are copied unchanged.
inline std::size_t cmd_augment(const std::string& in_path, const std::filesystem::path& out_path,
                               std::size_t factor, std::uint64_t seed, const std::string& grammar_path) {
  if (factor == 0) throw ConfigError("factor", "must be at least 1");
  const Grammar g = load_grammar_or_default(grammar_path);
  const auto rows = read_dataset_file(in_path);
  Rng rng(seed);
  PartialFile out(out_path);
  std::size_t written = 0;
  for (const auto& row : rows) {
    const DerivationTree t = parse(g, row.encoding);
    for (const auto& s : expand_dataset(g, {{t, row.accuracy}}, factor, rng)) {
      DatasetRow r{encode_plain(g, s.tree).text, s.accuracy, row.dataset, row.extra_features};
      auto j = to_json(r);
      if (s.source_kind) j["augmentation"] = augment_name(*s.source_kind);
      out.stream() << j.dump() << "\n";
      ++written;
    }
  }
  out.commit();
  return written;
}

/// Samples `count` architectures and prints one encoding per line. The
/// with-shapes variant resamples trees until they compile.
inline void cmd_encode(const std::string& grammar_path, std::uint64_t seed, std::size_t count,
                       EncodingVariant variant, const TensorShape& input_shape, std::size_t max_depth,
                       std::ostream& out) {
  const Grammar g = load_grammar_or_default(grammar_path);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    if (variant == EncodingVariant::Plain) {
      out << encode_plain(g, sample_tree(g, max_depth, rng)).text << "\n";
      continue;
    }
    for (std::size_t attempt = 0;; ++attempt) {
      const auto t = sample_tree(g, max_depth, rng);
      try {
        out << encode_with_shapes(g, t, input_shape).text << "\n";
        break;
      } catch (const ShapeError&) {
        if (attempt >= 1000) throw;
      }
    }
  }
}

struct FitOptions {
  std::vector<std::string> data_files;
  std::filesystem::path out;
  std::string grammar_path;
  TensorShape input_shape = TensorShape::im(3, 32, 32);
  ForestParams params;
  NormalizationMethod normalization = NormalizationMethod::None;
  bool drop_zero = false;
  std::uint64_t seed = 0;
};

/// Fits a forest on the given datasets and writes it, with its feature
/// schema, normalization and seed, as one JSON document.
inline ForestModel cmd_fit_surrogate(const FitOptions& opt) {
  const Grammar g = load_grammar_or_default(opt.grammar_path);
  const TrainingSet all = load_training_files(g, opt.data_files, opt.input_shape, EncodingVariant::Plain);
  TrainingSet use;
  for (const auto& r : normalize(fit_normalizer(all, opt.normalization), all).rows) {
    if (!r.features || (opt.drop_zero && r.target == 0.0)) continue;
    use.rows.push_back(r);
  }
  if (use.size() < 2) throw ValidationError("fewer than two usable training rows");
  const auto model = fit_forest(use.feature_matrix(), use.targets(), opt.params, opt.seed);
  auto doc = model.to_json();
  doc["normalization"] = std::string(normalization_name(opt.normalization));
  doc["drop_zero"] = opt.drop_zero;
  doc["training_rows"] = use.size();
  PartialFile out(opt.out);
  out.stream() << doc.dump() << "\n";
  out.commit();
  return model;
}

}  // namespace snas::cli
