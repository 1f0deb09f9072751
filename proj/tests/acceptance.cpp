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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "snas/commands.hpp"

namespace {

using namespace snas;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const TensorShape kInput = TensorShape::im(3, 32, 32);

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << v;
  return s.str();
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << std::fixed << v;
  return s.str();
}

DerivationTree sample_compiling(const Grammar& g, Rng& rng, std::size_t max_depth = kDefaultMaxDepth) {
  for (;;) {
    auto t = sample_tree(g, max_depth, rng);
    try {
      compile(g, t, kInput);
      return t;
    } catch (const ShapeError&) {
    }
  }
}

// ---------------------------------------------------------------------------
// Rank correlation against pair-counting and rank-then-Pearson oracles.

std::optional<double> kendall_pairs(const std::vector<double>& x, const std::vector<double>& y) {
  long double nc = 0, nd = 0, n1 = 0, n2 = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = (x[i] - x[j]) * (y[i] - y[j]);
      nc += p > 0;
      nd += p < 0;
      n1 += x[i] == x[j];
      n2 += y[i] == y[j];
    }
  }
  const long double n0 = static_cast<long double>(n) * (n - 1) / 2;
  const long double den = (n0 - n1) * (n0 - n2);
  if (den == 0) return std::nullopt;
  return static_cast<double>((nc - nd) / std::sqrt(den));
}

std::optional<double> spearman_counting(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<long double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      long double less = 0, equal = 0;
      for (double w : v) less += w < v[i], equal += w == v[i];
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const long double n = static_cast<long double>(x.size());
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i], my += ry[i];
  mx /= n, my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

Outcome check_metrics() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20260101);
  std::uniform_int_distribution<std::size_t> len(2, 120);
  std::uniform_int_distribution<int> levels(2, 12);
  double worst = 0.0;
  std::size_t mismatched_definedness = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = len(rng);
    std::uniform_int_distribution<int> vx(0, levels(rng)), vy(0, levels(rng));
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = vx(rng) * 0.1, y[i] = vy(rng) * 0.1;
    const auto k = kendall_tau(x, y), ko = kendall_pairs(x, y);
    const auto s = spearman_rho(x, y), so = spearman_counting(x, y);
    if (k.has_value() != ko.has_value() || s.has_value() != so.has_value()) ++mismatched_definedness;
    if (k && ko) worst = std::max(worst, std::abs(*k - *ko));
    if (s && so) worst = std::max(worst, std::abs(*s - *so));
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-12 && mismatched_definedness == 0 && secs < 10.0,
          "max |diff| = " + sci(worst) + " over 1000 vector pairs, " +
              std::to_string(mismatched_definedness) + " definedness mismatches, " + fmt(secs, 2) + " s"};
}

// ---------------------------------------------------------------------------
// GRAF path features against exhaustive path enumeration.

Outcome check_graf_paths() {
  const auto start = Clock::now();
  const Grammar& g = default_grammar();
  const auto kinds = graph_op_kinds();
  Rng rng(7);
  std::size_t graphs = 0, mismatches = 0;
  while (graphs < 500) {
    const auto t = sample_tree(g, 5, rng);
    ArchGraph graph;
    try {
      graph = compile(g, t, kInput);
    } catch (const ShapeError&) {
      continue;
    }
    if (graph.nodes.size() > 8) continue;
    ++graphs;
    const auto succ = graph.successor_lists();
    std::vector<double> lo(kinds.size(), kMissingPath), hi(kinds.size(), kMissingPath);
    std::vector<std::size_t> path{graph.input_id};
    std::function<void(std::size_t)> walk = [&](std::size_t v) {
      if (v == graph.output_id) {
        const double L = static_cast<double>(path.size() - 1);
        for (std::size_t k = 0; k < kinds.size(); ++k) {
          bool hit = false;
          for (std::size_t id : path) {
            hit = hit || (graph.nodes[id].role == NodeRole::Op && graph.nodes[id].kind == kinds[k]);
          }
          if (!hit) continue;
          lo[k] = lo[k] < 0 ? L : std::min(lo[k], L);
          hi[k] = std::max(hi[k], L);
        }
        return;
      }
      for (std::size_t s : succ[v]) {
        path.push_back(s);
        walk(s);
        path.pop_back();
      }
    };
    walk(graph.input_id);
    const auto f = extract_graf(graph, kinds);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      if (f.values[5 * k + 1] != lo[k] || f.values[5 * k + 2] != hi[k]) ++mismatches;
    }
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 30.0,
          std::to_string(mismatches) + " mismatches over " + std::to_string(graphs) +
              " graphs with <= 8 nodes, " + fmt(secs, 2) + " s"};
}

// ---------------------------------------------------------------------------

Outcome check_round_trip() {
  const Grammar& g = default_grammar();
  Rng rng(99);
  std::size_t failures = 0, strip_failures = 0, shaped = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = sample_tree(g, kDefaultMaxDepth, rng);
    const auto plain = encode_plain(g, t).text;
    try {
      if (!(parse(g, plain) == t)) ++failures;
    } catch (const Error&) {
      ++failures;
    }
    try {
      const auto with = encode_with_shapes(g, t, kInput).text;
      ++shaped;
      if (strip_annotations(with) != plain) ++strip_failures;
    } catch (const ShapeError&) {
    }
  }
  return {failures == 0 && strip_failures == 0,
          std::to_string(failures) + "/1000 round-trip failures, " + std::to_string(strip_failures) + "/" +
              std::to_string(shaped) + " strip mismatches"};
}

// ---------------------------------------------------------------------------

std::vector<std::string> op_multiset(const ArchGraph& graph) {
  std::vector<std::string> ops;
  for (const auto& n : graph.nodes) {
    if (n.role != NodeRole::Op) continue;
    std::string s(op_name(n.kind));
    for (const auto& [k, v] : n.params) s += " " + k + "=" + to_string(v);
    ops.push_back(s);
  }
  std::sort(ops.begin(), ops.end());
  return ops;
}

void terminal_sequence(const DerivationTree& t, std::vector<std::string>& out) {
  if (t.children.empty()) {
    std::string s = t.nonterminal + "." + t.production;
    for (const auto& [k, v] : t.params) s += " " + k + "=" + to_string(v);
    out.push_back(s);
  }
  for (const auto& c : t.children) terminal_sequence(c, out);
}

std::vector<std::int64_t> linear_dims(const DerivationTree& t) {
  std::vector<std::int64_t> out;
  detail::for_each_preorder(t, [&](const DerivationTree& n, std::size_t) {
    if (n.production == "linear") out.push_back(std::get<std::int64_t>(n.params.at(0).second));
  });
  return out;
}

Outcome check_augmentation() {
  const Grammar& g = default_grammar();
  Rng rng(5);
  std::map<AugmentKind, std::size_t> done, bad;
  std::size_t total = 0;
  while (total < 1000) {
    // Cycle through the kinds so each one is exercised equally.
    const auto kind = kAllAugmentKinds[total % kAllAugmentKinds.size()];
    const auto t = sample_compiling(g, rng);
    const auto kinds = applicable_kinds(g, t);
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) continue;
    const auto out = augment(g, t, 0.5, kind, rng);
    ++total;
    ++done[kind];
    const auto before = compile(g, t, kInput);
    bool ok = true;
    switch (kind) {
      case AugmentKind::SwapSequential:
      case AugmentKind::SwapBranches: {
        const auto after = compile(g, out.tree, kInput);
        ok = op_multiset(after) == op_multiset(before) && after.nodes.back().out_shape == before.nodes.back().out_shape;
        if (kind == AugmentKind::SwapSequential) {
          std::vector<std::string> a, b;
          terminal_sequence(t, a);
          terminal_sequence(out.tree, b);
          ok = ok && a == b;
        }
        break;
      }
      case AugmentKind::InsertIdentity: {
        const auto after = compile(g, out.tree, kInput);
        auto expected = op_multiset(before);
        expected.push_back("identity");
        std::sort(expected.begin(), expected.end());
        ok = op_multiset(after) == expected && after.nodes.back().out_shape == before.nodes.back().out_shape;
        break;
      }
      case AugmentKind::PerturbDim: {
        const auto a = linear_dims(t), b = linear_dims(out.tree);
        std::size_t changed = 0;
        ok = a.size() == b.size();
        for (std::size_t i = 0; ok && i < a.size(); ++i) {
          if (a[i] == b[i]) continue;
          ++changed;
          const auto pa = std::find(kLinearDims.begin(), kLinearDims.end(), a[i]) - kLinearDims.begin();
          const auto pb = std::find(kLinearDims.begin(), kLinearDims.end(), b[i]) - kLinearDims.begin();
          ok = ok && std::abs(pa - pb) == 1 && pb < static_cast<std::ptrdiff_t>(kLinearDims.size());
        }
        ok = ok && changed == 1;
        break;
      }
    }
    if (!ok) ++bad[kind];
  }
  Rng noise_rng(6);
  double sum = 0, sum2 = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const double d = perturb_label(0.5, noise_rng) - 0.5;
    sum += d, sum2 += d * d;
  }
  const double mean = sum / draws;
  const double sd = std::sqrt((sum2 - draws * mean * mean) / (draws - 1));
  std::size_t violations = 0;
  for (const auto& [_, v] : bad) violations += v;
  std::string counts;
  for (const auto& [k, v] : done) counts += std::string(augment_name(k)) + "=" + std::to_string(v) + " ";
  return {violations == 0 && done.size() == 4 && sd >= 0.0045 && sd <= 0.0055,
          std::to_string(violations) + " invariant violations over 1000 augmentations (" + counts +
              "), label-noise std " + fmt(sd, 5)};
}

// ---------------------------------------------------------------------------

TrainingSet labelled_rows(const Evaluator& e, std::size_t n, std::uint64_t seed, const std::string& tag,
                          double scale = 1.0, double shift = 0.0) {
  const Grammar& g = default_grammar();
  Rng rng(seed);
  TrainingSet out;
  while (out.size() < n) {
    const auto t = sample_compiling(g, rng);
    out.rows.push_back({extract_graf(compile(g, t, kInput)), encode_plain(g, t).text,
                        scale * e.evaluate(g, t, kInput) + shift, tag});
  }
  return out;
}

double holdout_tau(Surrogate& s, const TrainingSet& test) {
  std::vector<SurrogateInput> in;
  for (const auto& r : test.rows) in.push_back({r.features, r.encoding});
  return kendall_tau(s.predict(in), test.targets()).value_or(0.0);
}

Outcome check_learnability() {
  const auto start = Clock::now();
  const Grammar& g = default_grammar();
  std::string taus;
  bool all = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticLinearEvaluator oracle(g, kInput, {.seed = seed});
    const auto train = labelled_rows(oracle, 500, 1000 + seed, "train");
    const auto test = labelled_rows(oracle, 200, 2000 + seed, "test");
    ForestSurrogate forest({{100, 1}, seed, false});
    forest.fit(train);
    const double tau = holdout_tau(forest, test);
    all = all && tau >= 0.6;
    taus += fmt(tau, 3) + " ";
  }
  const double secs = seconds_since(start);
  return {all && secs < 60.0, "holdout Kendall tau per seed: " + taus + "(need >= 0.6), " + fmt(secs, 1) + " s"};
}

// ---------------------------------------------------------------------------

SearchConfig paper_config(SurrogateKind kind, std::uint64_t seed) {
  SearchConfig cfg;
  cfg.population_size = 100;
  cfg.n_candidates = 20;
  cfg.k = 5;
  cfg.iterations = 300;
  cfg.surrogate = kind;
  cfg.seed = seed;
  return cfg;
}

// Best-so-far after each iteration.
std::vector<double> best_curve(const SearchResult& r) {
  std::vector<double> out;
  for (const auto& rec : r.iterations) out.push_back(rec.best);
  return out;
}

Outcome check_search_direction(double& elapsed) {
  const auto start = Clock::now();
  const Grammar& g = default_grammar();
  bool all = true;
  std::string detail;
  for (const std::string oracle_name : {"synthetic_linear", "synthetic_depth"}) {
    std::unique_ptr<Evaluator> oracle;
    if (oracle_name == "synthetic_linear") {
      oracle = std::make_unique<SyntheticLinearEvaluator>(g, kInput, SyntheticLinearConfig{.seed = 1});
    } else {
      oracle = std::make_unique<SyntheticDepthEvaluator>(SyntheticDepthConfig{.seed = 1});
    }
    std::size_t wins = 0;
    double mean_forest = 0, mean_none = 0;
    std::vector<double> fractions;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto none = run_search(paper_config(SurrogateKind::None, seed), g, *oracle, nullptr);
      ForestSurrogate forest({{100, 1}, seed, false});
      const auto with = run_search(paper_config(SurrogateKind::Forest, seed), g, *oracle, &forest);
      wins += with.best_fitness > none.best_fitness;
      mean_forest += with.best_fitness / 10;
      mean_none += none.best_fitness / 10;
      const auto curve = best_curve(with);
      double fraction = 2.0;  // never reached
      for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i] >= none.best_fitness) {
          fraction = static_cast<double>(i + 1) / static_cast<double>(curve.size());
          break;
        }
      }
      fractions.push_back(fraction);
    }
    std::sort(fractions.begin(), fractions.end());
    const double median = (fractions[4] + fractions[5]) / 2;
    const bool ok = wins >= 8 && mean_forest > mean_none && median <= 0.6;
    all = all && ok;
    detail += oracle_name + ": forest wins " + std::to_string(wins) + "/10, mean best " + fmt(mean_forest) +
              " vs " + fmt(mean_none) + ", median iterations-to-baseline " + fmt(median, 3) + "; ";
  }
  elapsed = seconds_since(start);
  return {all && elapsed < 600.0, detail + fmt(elapsed, 1) + " s"};
}

// ---------------------------------------------------------------------------

Outcome check_surrogate_as_objective() {
  const Grammar& g = default_grammar();
  const SyntheticLinearEvaluator oracle(g, kInput, {.seed = 1, .noise = 0.0});
  bool all = true;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ForestSurrogate standard_forest({{100, 1}, seed, false});
    const auto standard = run_search(paper_config(SurrogateKind::Forest, seed), g, oracle, &standard_forest);

    auto cfg = paper_config(SurrogateKind::Forest, seed);
    cfg.mode = SearchMode::SurrogateAsObjective;
    ForestSurrogate frozen({{100, 1}, seed, false});
    WarmStart warm{labelled_rows(oracle, 500, 5000 + seed, "warm"), NormalizationMethod::None};
    const auto sao = run_search(cfg, g, oracle, &frozen, warm);

    const double gap = standard.best_fitness - sao.best_fitness;
    const double ratio = static_cast<double>(sao.true_evaluations) / static_cast<double>(standard.true_evaluations);
    const bool ok = gap <= 0.1 && ratio < 0.05;
    all = all && ok;
    detail += "seed " + std::to_string(seed) + ": " + fmt(sao.best_fitness) + " vs " + fmt(standard.best_fitness) +
              " with " + std::to_string(sao.true_evaluations) + "/" + std::to_string(standard.true_evaluations) +
              " evaluations; ";
  }
  return {all, detail};
}

// ---------------------------------------------------------------------------

Outcome check_normalization() {
  const Grammar& g = default_grammar();
  bool all = true;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticLinearEvaluator oracle(g, kInput, {.seed = seed});
    TrainingSet merged = labelled_rows(oracle, 250, 100 + seed, "low", 0.3, 0.0);
    merged.append(labelled_rows(oracle, 250, 200 + seed, "high", 0.3, 0.6));
    const auto holdout = labelled_rows(oracle, 200, 300 + seed, "holdout");
    double tau[2];
    const NormalizationMethod methods[2] = {NormalizationMethod::None, NormalizationMethod::Percentile};
    for (int m = 0; m < 2; ++m) {
      ForestSurrogate forest({{100, 1}, seed, false});
      forest.fit(normalize(fit_normalizer(merged, methods[m]), merged));
      tau[m] = holdout_tau(forest, holdout);
    }
    all = all && tau[1] > tau[0];
    detail += "seed " + std::to_string(seed) + ": percentile " + fmt(tau[1], 3) + " vs none " + fmt(tau[0], 3) + "; ";
  }
  return {all, detail};
}

// ---------------------------------------------------------------------------

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "snas-acceptance-XXXXXX").string();
    path_ = ::mkdtemp(tmpl.data());
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_rows(const fs::path& path, const TrainingSet& rows) {
  std::ofstream out(path);
  for (const auto& r : rows.rows) out << to_json(DatasetRow{r.encoding, r.target, r.dataset, std::nullopt}).dump() << "\n";
}

Outcome check_determinism() {
  TempDir dir;
  const Grammar& g = default_grammar();
  std::vector<std::string> differing;
  auto same = [&](const std::string& what, const fs::path& a, const fs::path& b) {
    if (read_text_file(a) != read_text_file(b)) differing.push_back(what);
  };

  const SyntheticLinearEvaluator oracle(g, kInput, {.seed = 3});
  write_rows(dir / "a.jsonl", labelled_rows(oracle, 120, 1, "a"));
  write_rows(dir / "b.jsonl", labelled_rows(oracle, 120, 2, "b"));

  std::vector<nlohmann::json> configs;
  for (const std::string surrogate : {"none", "forest"}) {
    for (const std::string evaluator : {"synthetic_linear", "synthetic_depth"}) {
      configs.push_back({{"seed", 17},
                         {"search", {{"population_size", 40}, {"n_candidates", 10}, {"k", 3}, {"iterations", 30}}},
                         {"surrogate", {{"kind", surrogate}, {"n_trees", 30}}},
                         {"evaluator", {{"kind", evaluator}, {"seed", 2}}}});
    }
  }
  configs.push_back({{"seed", 17},
                     {"search", {{"population_size", 40}, {"n_candidates", 10}, {"k", 3}, {"iterations", 30},
                                 {"mode", "surrogate_as_objective"}}},
                     {"surrogate", {{"kind", "forest"}, {"n_trees", 30}}},
                     {"evaluator", {{"kind", "synthetic_linear"}, {"seed", 2}}},
                     {"warm_start", {{"datasets", {(dir / "a.jsonl").string()}}}}});
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto run = "search" + std::to_string(i);
    cli::cmd_search(configs[i], dir / (run + "-1"));
    // Second run from the first run's manifest.
    const auto manifest = nlohmann::json::parse(read_text_file(dir / (run + "-1") / "manifest.json"));
    cli::cmd_search(manifest["config"], dir / (run + "-2"));
    for (const std::string f : {"log.jsonl", "initial.jsonl", "summary.json"}) {
      same(run + "/" + f, dir / (run + "-1") / f, dir / (run + "-2") / f);
    }
  }

  for (int i = 1; i <= 2; ++i) {
    std::ofstream out(dir / ("encode" + std::to_string(i)));
    cli::cmd_encode("", 7, 200, EncodingVariant::WithShapes, kInput, kDefaultMaxDepth, out);
  }
  same("encode", dir / "encode1", dir / "encode2");

  for (int i = 1; i <= 2; ++i) cli::cmd_augment((dir / "a.jsonl").string(), dir / ("aug" + std::to_string(i)), 3, 9, "");
  same("augment", dir / "aug1", dir / "aug2");

  for (int i = 1; i <= 2; ++i) {
    cli::FitOptions o;
    o.data_files = {(dir / "a.jsonl").string(), (dir / "b.jsonl").string()};
    o.out = dir / ("model" + std::to_string(i));
    o.normalization = NormalizationMethod::Percentile;
    o.seed = 4;
    cli::cmd_fit_surrogate(o);
  }
  same("fit-surrogate", dir / "model1", dir / "model2");

  cli::CorrelationOptions co;
  co.train_files = {(dir / "a.jsonl").string()};
  co.test_file = (dir / "b.jsonl").string();
  if (cli::cmd_eval_correlation(co) != cli::cmd_eval_correlation(co)) differing.push_back("eval-correlation");
  co.test_file.clear();
  co.refit_every = 20;
  if (cli::cmd_eval_correlation(co) != cli::cmd_eval_correlation(co)) differing.push_back("eval-correlation windows");
  cli::TransferOptions to;
  to.data_files = {(dir / "a.jsonl").string(), (dir / "b.jsonl").string()};
  if (cli::cmd_transfer_eval(to) != cli::cmd_transfer_eval(to)) differing.push_back("transfer-eval");

  std::string list;
  for (const auto& d : differing) list += d + " ";
  return {differing.empty(), differing.empty() ? "all command outputs byte-identical across repeated runs"
                                               : "differing outputs: " + list};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  double search_secs = 0;
  const std::vector<Criterion> criteria = {
      {"metric-oracle-equivalence", check_metrics},
      {"graf-path-oracle", check_graf_paths},
      {"encoder-round-trip", check_round_trip},
      {"augmentation-invariants", check_augmentation},
      {"surrogate-learnability", check_learnability},
      {"search-direction", [&] { return check_search_direction(search_secs); }},
      {"surrogate-as-objective", check_surrogate_as_objective},
      {"normalization", check_normalization},
      {"determinism", check_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
