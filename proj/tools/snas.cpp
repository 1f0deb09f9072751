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


#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "snas/commands.hpp"

namespace {

using namespace snas;
using namespace snas::cli;

NormalizationMethod normalization_flag(const std::string& s) {
  const auto m = parse_normalization(s);
  if (!m) throw ConfigError("normalization", "expected 'none', 'minmax' or 'percentile'");
  return *m;
}

SurrogateSpec surrogate_flags(const std::string& kind, const std::vector<std::string>& worker,
                              std::size_t n_trees, std::size_t min_leaf, bool drop_zero) {
  SurrogateSpec s;
  if (kind == "forest") {
    s.kind = SurrogateKind::Forest;
  } else if (kind == "external") {
    s.kind = SurrogateKind::External;
    s.command = worker;
    if (worker.empty() && std::getenv(kBridgeWorkerEnv) == nullptr) {
      throw ConfigError("worker", "external surrogate needs --worker or " + std::string(kBridgeWorkerEnv));
    }
  } else {
    throw ConfigError("surrogate", "expected 'forest' or 'external'");
  }
  if (n_trees == 0) throw ConfigError("n-trees", "must be positive");
  if (min_leaf == 0) throw ConfigError("min-samples-leaf", "must be positive");
  s.forest = ForestParams{n_trees, min_leaf};
  s.drop_zero = drop_zero;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-assisted grammar-based architecture search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string grammar_path;
  std::vector<std::int64_t> input_shape{3, 32, 32};
  std::uint64_t seed = 0;

  // search
  auto* search = app.add_subcommand("search", "Run a search from a JSON config");
  std::string config_path;
  std::string out_dir = "run";
  std::optional<std::uint64_t> seed_override;
  std::optional<std::size_t> iterations_override;
  std::optional<std::string> surrogate_override;
  search->add_option("config", config_path, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  search->add_option("-o,--out", out_dir, "Output directory");
  search->add_option("--seed", seed_override, "Override the config seed");
  search->add_option("--iterations", iterations_override, "Override search.iterations");
  search->add_option("--surrogate", surrogate_override, "Override surrogate.kind")
      ->check(CLI::IsMember({"none", "forest", "external"}));

  // Shared surrogate flags for the evaluation commands.
  std::string surrogate_kind = "forest";
  std::vector<std::string> worker;
  std::size_t n_trees = 100;
  std::size_t min_leaf = 1;
  bool drop_zero = false;
  std::string normalization = "none";
  auto add_surrogate_flags = [&](CLI::App* c) {
    c->add_option("--surrogate", surrogate_kind, "forest or external");
    c->add_option("--worker", worker, "Bridge worker command line");
    c->add_option("--n-trees", n_trees, "Forest size");
    c->add_option("--min-samples-leaf", min_leaf, "Forest leaf size");
    c->add_flag("--drop-zero", drop_zero, "Exclude zero-accuracy rows from forest training");
    c->add_option("--normalization", normalization, "none, minmax or percentile");
    c->add_option("--seed", seed, "Surrogate seed");
    c->add_option("--grammar", grammar_path, "Grammar file (default: built-in)");
    c->add_option("--input-shape", input_shape, "Input shape: C H W, or S D for sequences")->expected(2, 3);
  };

  // eval-correlation
  auto* corr = app.add_subcommand("eval-correlation", "Fit a surrogate and report rank correlation");
  std::vector<std::string> train_files;
  std::string test_file;
  std::optional<std::size_t> train_prefix, eval_window, refit_every;
  corr->add_option("--train", train_files, "Training dataset files")->required()->check(CLI::ExistingFile);
  corr->add_option("--test", test_file, "Test dataset file")->check(CLI::ExistingFile);
  corr->add_option("--train-prefix", train_prefix, "Without --test: train on the first m rows");
  corr->add_option("--eval-window", eval_window, "Without --test: evaluate on the next k rows");
  corr->add_option("--refit-every", refit_every, "Without --test: slide the split by N rows");
  add_surrogate_flags(corr);

  // transfer-eval
  auto* transfer = app.add_subcommand("transfer-eval", "Leave-one-dataset-out correlation");
  std::vector<std::string> data_files;
  transfer->add_option("data", data_files, "Dataset files")->required()->check(CLI::ExistingFile);
  add_surrogate_flags(transfer);

  // augment
  auto* aug = app.add_subcommand("augment", "Expand a dataset with architecture augmentations");
  std::string in_path, out_path;
  std::size_t factor = 1;
  aug->add_option("input", in_path, "Input dataset")->required()->check(CLI::ExistingFile);
  aug->add_option("-o,--out", out_path, "Output dataset")->required();
  aug->add_option("--factor", factor, "Augmented variants per row");
  aug->add_option("--seed", seed, "Random seed");
  aug->add_option("--grammar", grammar_path, "Grammar file (default: built-in)");

  // encode
  auto* enc = app.add_subcommand("encode", "Sample architectures and print their encodings");
  std::size_t count = 10;
  std::string variant = "plain";
  std::size_t max_depth = kDefaultMaxDepth;
  enc->add_option("--count", count, "Number of samples");
  enc->add_option("--seed", seed, "Random seed");
  enc->add_option("--variant", variant, "plain or with-shapes")->check(CLI::IsMember({"plain", "with-shapes"}));
  enc->add_option("--max-depth", max_depth, "Derivation depth budget");
  enc->add_option("--grammar", grammar_path, "Grammar file (default: built-in)");
  enc->add_option("--input-shape", input_shape, "Input shape: C H W, or S D for sequences")->expected(2, 3);

  // fit-surrogate
  auto* fit = app.add_subcommand("fit-surrogate", "Fit a random forest and write it as JSON");
  std::string model_out;
  fit->add_option("data", data_files, "Dataset files")->required()->check(CLI::ExistingFile);
  fit->add_option("-o,--out", model_out, "Model output file")->required();
  fit->add_option("--n-trees", n_trees, "Forest size");
  fit->add_option("--min-samples-leaf", min_leaf, "Forest leaf size");
  fit->add_flag("--drop-zero", drop_zero, "Exclude zero-accuracy rows");
  fit->add_option("--normalization", normalization, "none, minmax or percentile");
  fit->add_option("--seed", seed, "Forest seed");
  fit->add_option("--grammar", grammar_path, "Grammar file (default: built-in)");
  fit->add_option("--input-shape", input_shape, "Input shape: C H W, or S D for sequences")->expected(2, 3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*search) {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(read_text_file(config_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config", e.what());
      }
      if (!doc.is_object()) throw ConfigError("config", "must be an object");
      if (seed_override) doc["seed"] = *seed_override;
      if (iterations_override) doc["search"]["iterations"] = *iterations_override;
      if (surrogate_override) doc["surrogate"]["kind"] = *surrogate_override;
      const auto result = cmd_search(doc, out_dir);
      std::cout << summary_json(result).dump(2) << "\n";
    } else if (*corr) {
      CorrelationOptions o;
      o.train_files = train_files;
      o.test_file = test_file;
      o.grammar_path = grammar_path;
      o.input_shape = shape_from_dims(input_shape, "input-shape");
      o.surrogate = surrogate_flags(surrogate_kind, worker, n_trees, min_leaf, drop_zero);
      o.normalization = normalization_flag(normalization);
      o.train_prefix = train_prefix;
      o.eval_window = eval_window;
      o.refit_every = refit_every;
      o.seed = seed;
      std::cout << cmd_eval_correlation(o).dump(2) << "\n";
    } else if (*transfer) {
      TransferOptions o;
      o.data_files = data_files;
      o.grammar_path = grammar_path;
      o.input_shape = shape_from_dims(input_shape, "input-shape");
      o.surrogate = surrogate_flags(surrogate_kind, worker, n_trees, min_leaf, drop_zero);
      o.normalization = normalization_flag(transfer->count("--normalization") ? normalization : "percentile");
      o.seed = seed;
      std::cout << cmd_transfer_eval(o).dump(2) << "\n";
    } else if (*aug) {
      const auto n = cmd_augment(in_path, out_path, factor, seed, grammar_path);
      std::cerr << "wrote " << n << " rows to " << out_path << "\n";
    } else if (*enc) {
      cmd_encode(grammar_path, seed, count, variant == "plain" ? EncodingVariant::Plain : EncodingVariant::WithShapes,
                 shape_from_dims(input_shape, "input-shape"), max_depth, std::cout);
    } else if (*fit) {
      FitOptions o;
      o.data_files = data_files;
      o.out = model_out;
      o.grammar_path = grammar_path;
      o.input_shape = shape_from_dims(input_shape, "input-shape");
      o.params = ForestParams{n_trees, min_leaf};
      o.normalization = normalization_flag(normalization);
      o.drop_zero = drop_zero;
      o.seed = seed;
      cmd_fit_surrogate(o);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
