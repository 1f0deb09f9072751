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

// Client side of the external-surrogate protocol: newline-delimited JSON
// over a worker's stdin/stdout, strictly one request then one response.
//
//   -> {"op":"hello","version":1}                         <- {"ok":true}
//   -> {"op":"fit","rows":[{"encoding":..,"target":..}]}  <- {"ok":true}
//   -> {"op":"predict","encodings":[..]}                  <- {"ok":true,"predictions":[..]}
//   -> {"op":"shutdown"}                                  <- {"ok":true}
// Failures come back as {"ok":false,"error":"..."}.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "snas/error.hpp"
#include "snas/subprocess.hpp"

namespace snas {

inline constexpr int kBridgeProtocolVersion = 1;

/// Overrides the configured worker command line (run through /bin/sh).
inline constexpr const char* kBridgeWorkerEnv = "SNAS_BRIDGE_WORKER";

struct BridgeTimeouts {
  std::chrono::milliseconds fit{600'000};
  std::chrono::milliseconds predict{60'000};
};

class BridgeClient {
 public:
  /// Spawns the worker and performs the hello handshake.
  explicit BridgeClient(const std::vector<std::string>& argv, BridgeTimeouts timeouts = {})
      : process_(spawn(argv)), timeouts_(timeouts) {
    request({{"op", "hello"}, {"version", kBridgeProtocolVersion}}, timeouts_.predict);
  }

  BridgeClient(const BridgeClient&) = delete;
  BridgeClient& operator=(const BridgeClient&) = delete;

  ~BridgeClient() {
    try {
      shutdown();
    } catch (const Error&) {
      process_.kill();
    }
  }

  /// Blocks until the worker acknowledges.
  void fit(const std::vector<std::pair<std::string, double>>& rows) {
    nlohmann::json jrows = nlohmann::json::array();
    for (const auto& [enc, target] : rows) jrows.push_back({{"encoding", enc}, {"target", target}});
    request({{"op", "fit"}, {"rows", std::move(jrows)}}, timeouts_.fit);
  }

  /// One finite prediction per encoding, in order.
  std::vector<double> predict(const std::vector<std::string>& encodings) {
    const auto reply =
        request({{"op", "predict"}, {"encodings", encodings}}, timeouts_.predict);
    if (!reply.contains("predictions") || !reply["predictions"].is_array()) {
      throw ProtocolError("predict reply has no 'predictions' array");
    }
    const auto& preds = reply["predictions"];
    if (preds.size() != encodings.size()) {
      throw ProtocolError("worker returned " + std::to_string(preds.size()) + " predictions for " +
                          std::to_string(encodings.size()) + " encodings");
    }
    std::vector<double> out;
    out.reserve(preds.size());
    for (const auto& p : preds) {
      if (!p.is_number() || !std::isfinite(p.get<double>())) {
        throw ProtocolError("worker returned a non-finite prediction");
      }
      out.push_back(p.get<double>());
    }
    return out;
  }

  void shutdown() {
    if (closed_) return;
    closed_ = true;
    request({{"op", "shutdown"}}, timeouts_.predict);
    process_.close_stdin();
    if (!process_.wait_for(std::chrono::milliseconds(5000))) process_.kill();
  }

 private:
  static Subprocess spawn(const std::vector<std::string>& argv) {
    if (const char* cmd = std::getenv(kBridgeWorkerEnv); cmd != nullptr && *cmd != '\0') {
      return Subprocess::shell(cmd);
    }
    return Subprocess(argv);
  }

  nlohmann::json request(const nlohmann::json& msg, std::chrono::milliseconds timeout) {
    process_.write_all(msg.dump() + "\n");
    auto line = process_.read_line(timeout);
    if (!line) {
      closed_ = true;
      throw WorkerCrashed("worker exited during '" + msg["op"].get<std::string>() + "'" +
                          process_.diagnostics());
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(*line);
    } catch (const nlohmann::json::parse_error&) {
      throw ProtocolError("malformed reply frame: " + line->substr(0, 200));
    }
    if (!reply.is_object() || !reply.contains("ok") || !reply["ok"].is_boolean()) {
      throw ProtocolError("reply frame lacks boolean 'ok': " + line->substr(0, 200));
    }
    if (!reply["ok"].get<bool>()) {
      const std::string err = reply.contains("error") && reply["error"].is_string()
                                  ? reply["error"].get<std::string>()
                                  : std::string("unspecified");
      throw ProtocolError("worker rejected '" + msg["op"].get<std::string>() + "': " + err);
    }
    return reply;
  }

  Subprocess process_;
  BridgeTimeouts timeouts_;
  bool closed_ = false;
};

}  // namespace snas
