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

#ifndef ILF_HTTP_BACKEND_H_
#define ILF_HTTP_BACKEND_H_

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "ilf/backend.h"
#include "ilf/core.h"

namespace ilf {

// Connection settings for an OpenAI-style endpoint. `base_url` includes any
// version prefix, e.g. "http://localhost:8000/v1".
struct HttpConfig {
  std::string base_url;
  std::string api_key_env;
  std::string model;
  int timeout_ms = 30000;
  int max_in_flight = 4;
  int max_retries = 5;
  std::string bos_cue = "<|endoftext|>";
  std::chrono::milliseconds backoff_initial{200};
  std::chrono::milliseconds backoff_max{5000};

  static HttpConfig FromSpec(const BackendSpec& spec);
};

// JSON-over-HTTP client with bounded concurrency and exponential backoff.
// Retries transport failures, 429 and 5xx; other statuses fail at once.
// Copies share the in-flight bound.
class HttpClient {
 public:
  explicit HttpClient(HttpConfig config);

  Json Post(const std::string& path, const Json& body) const;
  Json Get(const std::string& path) const;

  const HttpConfig& config() const { return config_; }

 private:
  Json Send(const std::string& method, const std::string& path,
            const Json* body) const;

  HttpConfig config_;
  std::string origin_;
  std::string prefix_;
  std::shared_ptr<std::counting_semaphore<>> in_flight_;
};

// Adapter for a completion endpoint:
//   POST {base}/completions {model, prompt, max_tokens, temperature, top_p,
//                            n, seed}            -> choices[i].text
//   log-probabilities: same endpoint with echo=true, max_tokens=0,
//   logprobs=0; tokens whose text_offset range reaches past the prefix are
//   summed.
class HttpPolicy : public Policy {
 public:
  explicit HttpPolicy(HttpConfig config);

  BackendKind kind() const override { return BackendKind::kHttp; }
  const std::string& model_id() const override { return client_.config().model; }
  std::vector<std::string> Generate(std::string_view prompt,
                                    const SamplingParams& params,
                                    int n) const override;
  double SequenceLogprob(std::string_view prefix,
                         std::string_view continuation) const override;
  std::vector<double> SequenceLogprobs(
      std::span<const std::pair<std::string, std::string>> queries)
      const override;
  std::string_view BosCue() const override { return client_.config().bos_cue; }

  const HttpClient& client() const { return client_; }

 private:
  HttpClient client_;
};

// Submits finetune jobs:
//   POST {base}/fine_tuning/jobs {model, training_data: [{prompt,
//        completion, weight}], hyperparameters: {prompt_loss_weight}}
//   GET  {base}/fine_tuning/jobs/{id} until status is "succeeded"
//        (fine_tuned_model) or "failed"/"cancelled".
class HttpFinetuneClient {
 public:
  explicit HttpFinetuneClient(HttpConfig config,
                              std::chrono::milliseconds poll_interval =
                                  std::chrono::milliseconds(1000),
                              int max_polls = 3600);

  // Returns the resulting model id.
  std::string Submit(const std::string& base_model,
                     std::span<const FinetuneRecord> records,
                     double lambda) const;

  const HttpConfig& config() const { return client_.config(); }

 private:
  HttpClient client_;
  std::chrono::milliseconds poll_interval_;
  int max_polls_;
};

}  // namespace ilf

#endif  // ILF_HTTP_BACKEND_H_
