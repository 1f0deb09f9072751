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

// JSON-lines dataset files: one {"encoding", "accuracy", "dataset",
// "extra_features"} record per line.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "snas/compiler.hpp"
#include "snas/encoder.hpp"
#include "snas/error.hpp"
#include "snas/features.hpp"
#include "snas/grammar.hpp"
#include "snas/surrogate.hpp"

namespace snas {

struct DatasetRow {
  std::string encoding;
  double accuracy = 0.0;
  std::string dataset;
  std::optional<FeatureVector> extra_features;
};

inline nlohmann::json to_json(const DatasetRow& r) {
  nlohmann::json j{{"encoding", r.encoding}, {"accuracy", r.accuracy}, {"dataset", r.dataset}};
  if (r.extra_features) {
    nlohmann::json extra = nlohmann::json::object();
    for (std::size_t i = 0; i < r.extra_features->size(); ++i) {
      extra[r.extra_features->schema[i]] = r.extra_features->values[i];
    }
    j["extra_features"] = extra;
  }
  return j;
}

/// Reads every record; `default_tag` fills a missing "dataset" field.
/// Errors name the source and line.
inline std::vector<DatasetRow> read_dataset(std::istream& in, const std::string& source,
                                            const std::string& default_tag) {
  std::vector<DatasetRow> rows;
  std::optional<std::vector<std::string>> extra_schema;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": " + e.what(), lineno, e.byte);
    }
    if (!j.is_object() || !j.contains("encoding") || !j["encoding"].is_string()) {
      throw ValidationError(where + ": record needs a string 'encoding'");
    }
    if (!j.contains("accuracy") || !j["accuracy"].is_number()) {
      throw ValidationError(where + ": record needs a numeric 'accuracy'");
    }
    DatasetRow row;
    row.encoding = j["encoding"].get<std::string>();
    row.accuracy = j["accuracy"].get<double>();
    if (!(row.accuracy >= 0.0 && row.accuracy <= 1.0)) {
      throw ValidationError(where + ": accuracy must lie in [0, 1]");
    }
    row.dataset = j.contains("dataset") && j["dataset"].is_string() ? j["dataset"].get<std::string>()
                                                                     : default_tag;
    if (j.contains("extra_features") && !j["extra_features"].is_null()) {
      if (!j["extra_features"].is_object()) {
        throw ValidationError(where + ": extra_features must be an object");
      }
      FeatureVector fv;
      for (const auto& [k, v] : j["extra_features"].items()) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
          throw ValidationError(where + ": extra feature '" + k + "' must be a finite number");
        }
        fv.schema.push_back(k);
        fv.values.push_back(v.get<double>());
      }
      if (extra_schema && *extra_schema != fv.schema) {
        throw SchemaError(where + ": extra_features schema differs from earlier records");
      }
      extra_schema = fv.schema;
      row.extra_features = std::move(fv);
    } else if (extra_schema && !extra_schema->empty()) {
      throw SchemaError(where + ": record lacks extra_features present on earlier records");
    } else {
      extra_schema = std::vector<std::string>{};
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<DatasetRow> read_dataset_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  return read_dataset(in, path.string(), path.stem().string());
}

/// Parses, compiles and featurizes each row. Rows whose architecture does
/// not compile keep their encoding but carry no features.
inline TrainingSet to_training_set(const Grammar& g, const std::vector<DatasetRow>& rows,
                                   const TensorShape& input_shape,
                                   EncodingVariant variant = EncodingVariant::WithShapes) {
  TrainingSet out;
  out.rows.reserve(rows.size());
  for (const auto& r : rows) {
    const DerivationTree t = parse(g, r.encoding);
    TrainingRow row{std::nullopt, encode_plain(g, t).text, r.accuracy, r.dataset};
    try {
      const ArchGraph graph = compile(g, t, input_shape);
      row.features = assemble_input(extract_graf(graph), r.extra_features);
      if (variant == EncodingVariant::WithShapes) row.encoding = encode_with_shapes(g, t, input_shape).text;
    } catch (const ShapeError&) {
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

/// Output file that only appears under its final name after commit();
/// until then (or on failure) data lives in `<path>.partial`.
class PartialFile {
 public:
  explicit PartialFile(std::filesystem::path path)
      : path_(std::move(path)), partial_(path_.string() + ".partial"), out_(partial_) {
    if (!out_) throw Error("cannot write '" + partial_.string() + "'");
  }

  std::ostream& stream() { return out_; }

  void commit() {
    out_.flush();
    if (!out_) throw Error("write to '" + partial_.string() + "' failed");
    out_.close();
    std::filesystem::rename(partial_, path_);
  }

 private:
  std::filesystem::path path_;
  std::filesystem::path partial_;
  std::ofstream out_;
};

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace snas
