/*
 * Copyright 2026 The ILF Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "httplib.h"
#include "ilf/error.h"
#include "ilf/http_backend.h"
#include "ilf/select.h"

namespace ilf {
namespace {

// httplib server on an ephemeral port, stopped on destruction.
class FakeServer {
 public:
  FakeServer() = default;
  ~FakeServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Server& server() { return server_; }

  void Start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  HttpConfig Config() const {
    HttpConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    config.model = "base";
    config.max_retries = 3;
    config.timeout_ms = 5000;
    config.backoff_initial = std::chrono::milliseconds(1);
    config.backoff_max = std::chrono::milliseconds(2);
    return config;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

void Reply(httplib::Response& res, const Json& body) {
  res.set_content(body.dump(), "application/json");
}

TEST(HttpPolicyTest, GenerateReadsChoicesByIndex) {
  FakeServer fake;
  Json seen;
  fake.server().Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = Json::parse(req.body);
    Reply(res, {{"choices", Json::array({{{"index", 1}, {"text", " second"}},
                                         {{"index", 0}, {"text", " first"}}})}});
  });
  fake.Start();
  HttpPolicy policy(fake.Config());
  SamplingParams params;
  params.seed = 9;
  EXPECT_EQ(policy.Generate("prompt", params, 2),
            (std::vector<std::string>{" first", " second"}));
  EXPECT_EQ(seen["model"], "base");
  EXPECT_EQ(seen["n"], 2);
  EXPECT_EQ(seen["seed"], 9);
  EXPECT_EQ(seen["prompt"], "prompt");
}

TEST(HttpPolicyTest, EchoLogprobsSumContinuationTokens) {
  FakeServer fake;
  fake.server().Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body);
    EXPECT_EQ(body["echo"], true);
    EXPECT_EQ(body["max_tokens"], 0);
    EXPECT_EQ(body["prompt"], "Hello world");
    Json logprobs = {{"tokens", {"Hello", " wor", "ld"}},
                     {"token_logprobs", {nullptr, -1.0, -2.0}},
                     {"text_offset", {0, 5, 9}}};
    Reply(res, {{"choices", Json::array({{{"text", "Hello world"}, {"logprobs", logprobs}}})}});
  });
  fake.Start();
  HttpPolicy policy(fake.Config());
  EXPECT_DOUBLE_EQ(policy.SequenceLogprob("Hello", " world"), -3.0);
  EXPECT_DOUBLE_EQ(policy.SequenceLogprob("Hello wor", "ld"), -2.0);
}

TEST(HttpPolicyTest, MissingLogprobsIsCapabilityError) {
  FakeServer fake;
  fake.server().Post("/v1/completions", [&](const httplib::Request&, httplib::Response& res) {
    Reply(res, {{"choices", Json::array({{{"text", "x"}}})}});
  });
  fake.Start();
  HttpPolicy policy(fake.Config());
  try {
    policy.SequenceLogprob("a", "b");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapability);
  }
}

TEST(HttpClientTest, RetriesThrottlingAndServerErrors) {
  FakeServer fake;
  std::atomic<int> calls{0};
  fake.server().Post("/v1/x", [&](const httplib::Request&, httplib::Response& res) {
    const int n = ++calls;
    if (n == 1) {
      res.status = 429;
    } else if (n == 2) {
      res.status = 503;
    } else {
      Reply(res, {{"ok", true}});
    }
  });
  fake.Start();
  HttpClient client(fake.Config());
  EXPECT_EQ(client.Post("/x", Json::object())["ok"], true);
  EXPECT_EQ(calls.load(), 3);
}

TEST(HttpClientTest, GivesUpAfterMaxRetries) {
  FakeServer fake;
  std::atomic<int> calls{0};
  fake.server().Post("/v1/x", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  fake.Start();
  HttpClient client(fake.Config());
  try {
    client.Post("/x", Json::object());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(calls.load(), 3);
}

TEST(HttpClientTest, ClientErrorsAreNotRetried) {
  FakeServer fake;
  std::atomic<int> calls{0};
  fake.server().Post("/v1/x", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
    res.set_content("bad prompt", "text/plain");
  });
  fake.Start();
  HttpClient client(fake.Config());
  try {
    client.Post("/x", Json::object());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.attempts(), 1);
    EXPECT_NE(std::string(e.what()).find("bad prompt"), std::string::npos);
  }
  EXPECT_EQ(calls.load(), 1);
}

TEST(HttpClientTest, BoundsRequestsInFlight) {
  FakeServer fake;
  std::atomic<int> current{0};
  std::atomic<int> peak{0};
  fake.server().Post("/v1/completions", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++current;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --current;
    Json logprobs = {{"tokens", {"a"}}, {"token_logprobs", {-1.0}}, {"text_offset", {0}}};
    Reply(res, {{"choices", Json::array({{{"text", "a"}, {"logprobs", logprobs}}})}});
  });
  fake.Start();
  HttpConfig config = fake.Config();
  config.max_in_flight = 2;
  HttpPolicy policy(config);
  std::vector<std::pair<std::string, std::string>> queries(8, {"", "a"});
  const auto logps = policy.SequenceLogprobs(queries);
  EXPECT_EQ(logps, std::vector<double>(8, -1.0));
  EXPECT_LE(peak.load(), 2);
  EXPECT_GE(peak.load(), 1);
}

TEST(HttpFinetuneTest, PollsUntilSucceeded) {
  FakeServer fake;
  Json submitted;
  std::atomic<int> polls{0};
  fake.server().Post("/v1/fine_tuning/jobs", [&](const httplib::Request& req, httplib::Response& res) {
    submitted = Json::parse(req.body);
    Reply(res, {{"id", "ft-1"}, {"status", "queued"}});
  });
  fake.server().Get("/v1/fine_tuning/jobs/ft-1", [&](const httplib::Request&, httplib::Response& res) {
    if (++polls < 3) {
      Reply(res, {{"id", "ft-1"}, {"status", "running"}});
    } else {
      Reply(res, {{"id", "ft-1"}, {"status", "succeeded"}, {"fine_tuned_model", "base:ft-1"}});
    }
  });
  fake.Start();
  HttpFinetuneClient client(fake.Config(), std::chrono::milliseconds(1));
  const std::vector<FinetuneRecord> records = {{"p", " c", 0.5}};
  EXPECT_EQ(client.Submit("base", records, 0.1), "base:ft-1");
  EXPECT_EQ(submitted["model"], "base");
  EXPECT_EQ(submitted["training_data"][0]["completion"], " c");
  EXPECT_DOUBLE_EQ(submitted["training_data"][0]["weight"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(submitted["hyperparameters"]["prompt_loss_weight"].get<double>(), 0.1);
}

TEST(HttpFinetuneTest, FailedJobNamesTheJob) {
  FakeServer fake;
  fake.server().Post("/v1/fine_tuning/jobs", [&](const httplib::Request&, httplib::Response& res) {
    Reply(res, {{"id", "ft-7"}, {"status", "queued"}});
  });
  fake.server().Get("/v1/fine_tuning/jobs/ft-7", [&](const httplib::Request&, httplib::Response& res) {
    Reply(res, {{"id", "ft-7"}, {"status", "failed"}});
  });
  fake.Start();
  HttpFinetuneClient client(fake.Config(), std::chrono::milliseconds(1));
  const std::vector<FinetuneRecord> records = {{"p", " c", 1.0}};
  try {
    client.Submit("base", records, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFinetune);
    EXPECT_NE(std::string(e.what()).find("ft-7"), std::string::npos);
  }
}

TEST(HttpEmbedderTest, ReadsFirstEmbedding) {
  FakeServer fake;
  fake.server().Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body);
    EXPECT_EQ(body["model"], "embed");
    const double x = body["input"] == "a" ? 1.0 : 0.0;
    Reply(res, {{"data", Json::array({{{"embedding", {x, 1.0 - x}}}})}});
  });
  fake.Start();
  const HttpConfig config = fake.Config();
  BackendSpec spec;
  spec.kind = "http";
  spec.base_url = config.base_url;
  HttpEmbedder embedder(spec, "embed");
  EXPECT_EQ(embedder.Embed("a"), (std::vector<double>{1.0, 0.0}));
  EXPECT_DOUBLE_EQ(ScoreEmbedding(embedder, "a", "b"), 0.0);
}

TEST(HttpClientTest, RequiresBaseUrl) {
  EXPECT_THROW(HttpClient(HttpConfig{}), Error);
}

}  // namespace
}  // namespace ilf
