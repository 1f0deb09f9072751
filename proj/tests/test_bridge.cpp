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


#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <string>

#include "snas/bridge.hpp"
#include "snas/surrogate.hpp"

namespace snas {
namespace {

std::vector<std::string> worker(const std::string& mode) { return {SNAS_MOCK_WORKER, mode}; }

TEST(Bridge, FitAndPredict) {
  BridgeClient c(worker("good"));
  c.fit({{"identity", 0.2}, {"computation<relu>", 0.4}});
  const auto p = c.predict({"identity", "ab"});
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[0], 0.3 + 0.008);
  EXPECT_DOUBLE_EQ(p[1], 0.3 + 0.002);
  c.shutdown();
  c.shutdown();  // idempotent
}

TEST(Bridge, EmptyPredict) {
  BridgeClient c(worker("good"));
  EXPECT_TRUE(c.predict({}).empty());
}

TEST(Bridge, ErrorFrameBecomesProtocolError) {
  BridgeClient c(worker("good"));
  try {
    c.predict({"identity"});
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("predict before fit"), std::string::npos);
  }
}

TEST(Bridge, WrongLength) {
  BridgeClient c(worker("wrong-length"));
  c.fit({{"identity", 0.5}});
  EXPECT_THROW(c.predict({"identity"}), ProtocolError);
}

TEST(Bridge, MalformedReply) {
  BridgeClient c(worker("malformed"));
  c.fit({{"identity", 0.5}});
  EXPECT_THROW(c.predict({"identity"}), ProtocolError);
}

TEST(Bridge, NonNumericPrediction) {
  BridgeClient c(worker("non-numeric"));
  c.fit({{"identity", 0.5}});
  EXPECT_THROW(c.predict({"identity"}), ProtocolError);
}

TEST(Bridge, MissingOk) {
  BridgeClient c(worker("no-ok"));
  c.fit({{"identity", 0.5}});
  EXPECT_THROW(c.predict({"identity"}), ProtocolError);
}

TEST(Bridge, CrashCarriesDiagnostics) {
  BridgeClient c(worker("crash-on-fit"));
  try {
    c.fit({{"identity", 0.5}});
    FAIL() << "expected WorkerCrashed";
  } catch (const WorkerCrashed& e) {
    EXPECT_NE(std::string(e.what()).find("out of memory"), std::string::npos) << e.what();
  }
}

TEST(Bridge, HandshakeRejected) { EXPECT_THROW(BridgeClient(worker("reject-hello")), ProtocolError); }

TEST(Bridge, MissingBinary) {
  EXPECT_THROW(BridgeClient({"/nonexistent/snas-worker"}), WorkerCrashed);
}

TEST(Bridge, PredictTimeout) {
  BridgeTimeouts t;
  t.predict = std::chrono::milliseconds(300);
  BridgeClient c(worker("slow"), t);
  c.fit({{"identity", 0.5}});
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(c.predict({"identity"}), TimeoutError);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(2));
}

TEST(Bridge, EnvironmentOverride) {
  const std::string cmd = std::string("'") + SNAS_MOCK_WORKER + "' wrong-length";
  ::setenv(kBridgeWorkerEnv, cmd.c_str(), 1);
  BridgeClient c(worker("good"));
  ::unsetenv(kBridgeWorkerEnv);
  c.fit({{"identity", 0.5}});
  EXPECT_THROW(c.predict({"identity"}), ProtocolError);
}

TEST(ExternalSurrogate, RoundTrip) {
  ExternalSurrogate s(worker("good"));
  EXPECT_FALSE(s.fitted());
  TrainingSet data;
  for (int i = 0; i < 100; ++i) data.rows.push_back({std::nullopt, "identity", 0.5, "d"});
  s.fit(data);
  EXPECT_TRUE(s.fitted());
  std::vector<SurrogateInput> in(10, SurrogateInput{std::nullopt, "computation<relu>"});
  const auto p = s.predict(in);
  ASSERT_EQ(p.size(), 10u);
  for (double v : p) EXPECT_TRUE(std::isfinite(v));
  TrainingSet bad;
  bad.rows.push_back({std::nullopt, "", 0.5, "d"});
  EXPECT_THROW(s.fit(bad), SchemaError);
}

}  // namespace
}  // namespace snas
