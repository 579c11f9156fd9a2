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

#include "ilf/http_backend.h"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "ilf/error.h"
#include "ilf/parallel.h"

namespace ilf {

namespace {

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<>& sem) : sem_(sem) {
    sem_.acquire();
  }
  ~SemaphoreGuard() { sem_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

bool Retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpConfig HttpConfig::FromSpec(const BackendSpec& spec) {
  HttpConfig config;
  config.base_url = spec.base_url;
  config.api_key_env = spec.api_key_env;
  config.model = spec.model_id;
  config.timeout_ms = spec.timeout_ms;
  config.max_in_flight = spec.max_in_flight;
  config.max_retries = spec.max_retries;
  if (!spec.bos_cue.empty()) config.bos_cue = spec.bos_cue;
  return config;
}

HttpClient::HttpClient(HttpConfig config)
    : config_(std::move(config)),
      in_flight_(std::make_shared<std::counting_semaphore<>>(
          std::max(1, config_.max_in_flight))) {
  if (config_.base_url.empty()) {
    Fail(ErrorKind::kValidation, "http backend needs base_url");
  }
  Require(config_.max_retries >= 1, "http backend needs max_retries >= 1");
  const size_t scheme = config_.base_url.find("://");
  const size_t path_start = config_.base_url.find(
      '/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) {
    origin_ = config_.base_url;
  } else {
    origin_ = config_.base_url.substr(0, path_start);
    prefix_ = config_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }
}

Json HttpClient::Post(const std::string& path, const Json& body) const {
  return Send("POST", path, &body);
}

Json HttpClient::Get(const std::string& path) const {
  return Send("GET", path, nullptr);
}

Json HttpClient::Send(const std::string& method, const std::string& path,
                      const Json* body) const {
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  const std::string payload = body ? body->dump() : std::string();
  const std::string full_path = prefix_ + path;

  std::string last_error;
  auto delay = config_.backoff_initial;
  for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
    {
      SemaphoreGuard guard(*in_flight_);
      httplib::Client client(origin_);
      const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      httplib::Result result =
          method == "POST"
              ? client.Post(full_path, headers, payload, "application/json")
              : client.Get(full_path, headers);
      if (!result) {
        last_error = "transport error: " + httplib::to_string(result.error());
      } else if (result->status >= 200 && result->status < 300) {
        try {
          return Json::parse(result->body);
        } catch (const Json::exception& e) {
          throw BackendError(attempt, method + " " + full_path +
                                          ": malformed JSON response: " +
                                          e.what());
        }
      } else if (!Retryable(result->status)) {
        throw BackendError(attempt, method + " " + full_path + ": HTTP " +
                                        std::to_string(result->status) + " " +
                                        result->body);
      } else {
        last_error = "HTTP " + std::to_string(result->status);
      }
    }
    if (attempt < config_.max_retries) {
      std::this_thread::sleep_for(delay);
      delay = std::min(delay * 2, config_.backoff_max);
    }
  }
  throw BackendError(config_.max_retries,
                     method + " " + full_path + ": " + last_error);
}

// ---------------------------------------------------------------------------

HttpPolicy::HttpPolicy(HttpConfig config) : client_(std::move(config)) {}

std::vector<std::string> HttpPolicy::Generate(std::string_view prompt,
                                              const SamplingParams& params,
                                              int n) const {
  Json request;
  request["model"] = client_.config().model;
  request["prompt"] = prompt;
  request["max_tokens"] = params.max_tokens;
  request["temperature"] = params.temperature;
  request["top_p"] = params.top_p;
  request["n"] = n;
  request["seed"] = params.seed;
  const Json response = client_.Post("/completions", request);
  std::vector<std::string> texts(static_cast<size_t>(n));
  std::vector<bool> seen(static_cast<size_t>(n), false);
  try {
    const Json& choices = response.at("choices");
    for (size_t i = 0; i < choices.size(); ++i) {
      const Json& choice = choices[i];
      const size_t index = choice.contains("index")
                               ? choice.at("index").get<size_t>()
                               : i;
      if (index >= texts.size()) continue;
      texts[index] = choice.at("text").get<std::string>();
      seen[index] = true;
    }
  } catch (const Json::exception& e) {
    throw BackendError(1, std::string("unexpected completion response: ") +
                              e.what());
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw BackendError(1, "completion response is missing choices");
  }
  return texts;
}

double HttpPolicy::SequenceLogprob(std::string_view prefix,
                                   std::string_view continuation) const {
  Json request;
  request["model"] = client_.config().model;
  request["prompt"] = std::string(prefix) + std::string(continuation);
  request["max_tokens"] = 0;
  request["echo"] = true;
  request["logprobs"] = 0;
  const Json response = client_.Post("/completions", request);
  const Json* logprobs = nullptr;
  try {
    logprobs = &response.at("choices").at(0).at("logprobs");
  } catch (const Json::exception&) {
  }
  if (logprobs == nullptr || logprobs->is_null() ||
      !logprobs->contains("token_logprobs") ||
      !logprobs->contains("text_offset") || !logprobs->contains("tokens")) {
    Fail(ErrorKind::kCapability,
         "http backend response carries no per-token logprobs");
  }
  const Json& tokens = logprobs->at("tokens");
  const Json& values = logprobs->at("token_logprobs");
  const Json& offsets = logprobs->at("text_offset");
  double total = 0.0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const size_t begin = offsets.at(i).get<size_t>();
    const size_t end = begin + tokens.at(i).get<std::string>().size();
    if (end <= prefix.size()) continue;
    if (values.at(i).is_null()) {
      Fail(ErrorKind::kCapability, "http backend returned a null logprob "
                                   "inside the continuation");
    }
    total += values.at(i).get<double>();
  }
  return total;
}

std::vector<double> HttpPolicy::SequenceLogprobs(
    std::span<const std::pair<std::string, std::string>> queries) const {
  return ParallelMap(queries.size(), client_.config().max_in_flight,
                     [&](size_t i) {
                       return SequenceLogprob(queries[i].first,
                                              queries[i].second);
                     });
}

// ---------------------------------------------------------------------------

HttpFinetuneClient::HttpFinetuneClient(HttpConfig config,
                                       std::chrono::milliseconds poll_interval,
                                       int max_polls)
    : client_(std::move(config)),
      poll_interval_(poll_interval),
      max_polls_(max_polls) {}

std::string HttpFinetuneClient::Submit(const std::string& base_model,
                                       std::span<const FinetuneRecord> records,
                                       double lambda) const {
  Json request;
  request["model"] = base_model;
  Json data = Json::array();
  for (const FinetuneRecord& record : records) data.push_back(ToJson(record));
  request["training_data"] = std::move(data);
  request["hyperparameters"] = {{"prompt_loss_weight", lambda}};

  std::string job_id;
  try {
    Json job = client_.Post("/fine_tuning/jobs", request);
    job_id = job.value("id", "");
    for (int poll = 0; poll <= max_polls_; ++poll) {
      const std::string status = job.value("status", "");
      if (status == "succeeded") {
        const std::string model = job.value("fine_tuned_model", "");
        if (model.empty()) break;
        return model;
      }
      if (status == "failed" || status == "cancelled") {
        Fail(ErrorKind::kFinetune,
             "finetune job " + job_id + " ended with status " + status);
      }
      if (job_id.empty()) break;
      std::this_thread::sleep_for(poll_interval_);
      job = client_.Get("/fine_tuning/jobs/" + job_id);
    }
  } catch (const BackendError& e) {
    Fail(ErrorKind::kFinetune,
         std::string("finetune job submission failed") +
             (job_id.empty() ? "" : " (job " + job_id + ")") + ": " + e.what());
  } catch (const Json::exception& e) {
    Fail(ErrorKind::kFinetune, std::string("malformed finetune response: ") +
                                   e.what());
  }
  Fail(ErrorKind::kFinetune,
       "finetune job " + (job_id.empty() ? std::string("<none>") : job_id) +
           " did not produce a model");
}

}  // namespace ilf
