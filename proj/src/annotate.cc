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

#include "ilf/annotate.h"

#include <algorithm>
#include <fstream>

#include "httplib.h"
#include "ilf/error.h"
#include "ilf/text.h"

namespace ilf {

std::string_view ToString(AnnotationKind kind) {
  switch (kind) {
    case AnnotationKind::kComparison: return "comparison";
    case AnnotationKind::kFeedback: return "feedback";
    case AnnotationKind::kIdealSummary: return "ideal_summary";
  }
  return "feedback";
}

std::optional<AnnotationKind> ParseAnnotationKind(std::string_view name) {
  if (name == "comparison") return AnnotationKind::kComparison;
  if (name == "feedback") return AnnotationKind::kFeedback;
  if (name == "ideal_summary") return AnnotationKind::kIdealSummary;
  return std::nullopt;
}

std::string_view ToString(TaskStatus status) {
  switch (status) {
    case TaskStatus::kOpen: return "open";
    case TaskStatus::kLeased: return "leased";
    case TaskStatus::kDone: return "done";
  }
  return "open";
}

Json ToJson(const AnnotationTask& task) {
  Json payload;
  payload["id"] = task.payload.id;
  payload["title"] = task.payload.title;
  payload["post"] = task.payload.post;
  switch (task.kind) {
    case AnnotationKind::kComparison:
      payload["output_a"] = task.output_a;
      payload["output_b"] = task.output_b;
      break;
    case AnnotationKind::kFeedback:
      payload["initial_output"] = task.payload.initial_output;
      break;
    case AnnotationKind::kIdealSummary:
      break;
  }
  Json json;
  json["task_id"] = task.task_id;
  json["kind"] = ToString(task.kind);
  json["status"] = ToString(task.status);
  json["payload"] = std::move(payload);
  return json;
}

std::vector<PendingComparison> LoadPendingComparisons(
    const std::filesystem::path& path) {
  std::vector<PendingComparison> out;
  size_t line = 0;
  for (const Json& row : ReadJsonLines(path)) {
    ++line;
    try {
      out.push_back({row.at("sample_id").get<std::string>(),
                     row.at("output_a").get<std::string>(),
                     row.at("output_b").get<std::string>()});
    } catch (const Json::exception& e) {
      throw ParseError(line, e.what());
    }
  }
  return out;
}

AnnotationQueue::AnnotationQueue(Options options, std::vector<Sample> samples)
    : options_(std::move(options)), samples_(std::move(samples)) {}

std::shared_ptr<AnnotationQueue> AnnotationQueue::FromRunDir(Options options) {
  const auto samples_path = options.run_dir / "samples.jsonl";
  std::vector<Sample> samples;
  if (std::filesystem::exists(samples_path)) samples = LoadSamples(samples_path);
  auto queue = std::make_shared<AnnotationQueue>(options, samples);
  for (const Sample& sample : samples) {
    if (sample.feedback.empty()) queue->AddFeedbackTask(sample);
    if (!sample.ideal_output) queue->AddIdealSummaryTask(sample);
  }
  const auto pending_path = options.run_dir / "comparisons_pending.jsonl";
  if (std::filesystem::exists(pending_path)) {
    for (const PendingComparison& pending : LoadPendingComparisons(pending_path)) {
      auto it = std::find_if(samples.begin(), samples.end(), [&](const Sample& s) {
        return s.id == pending.sample_id;
      });
      if (it == samples.end()) {
        Fail(ErrorKind::kValidation, "pending comparison for unknown sample '" +
                                         pending.sample_id + "'");
      }
      if (!it->comparison) {
        queue->AddComparisonTask(*it, pending.output_a, pending.output_b);
      }
    }
  }
  return queue;
}

void AnnotationQueue::UpsertSample(const Sample& sample) {
  auto it = std::find_if(samples_.begin(), samples_.end(),
                         [&](const Sample& s) { return s.id == sample.id; });
  if (it == samples_.end()) {
    samples_.push_back(sample);
  } else {
    *it = sample;
  }
}

std::string AnnotationQueue::AddTask(AnnotationTask task) {
  std::unique_lock lock(mutex_);
  task.task_id = "t" + std::to_string(next_id_++);
  auto it = std::find_if(samples_.begin(), samples_.end(), [&](const Sample& s) {
    return s.id == task.payload.id;
  });
  if (it == samples_.end()) samples_.push_back(task.payload);
  tasks_.push_back(std::move(task));
  return tasks_.back().task_id;
}

std::string AnnotationQueue::AddFeedbackTask(const Sample& sample) {
  AnnotationTask task;
  task.kind = AnnotationKind::kFeedback;
  task.payload = sample;
  return AddTask(std::move(task));
}

std::string AnnotationQueue::AddIdealSummaryTask(const Sample& sample) {
  AnnotationTask task;
  task.kind = AnnotationKind::kIdealSummary;
  task.payload = sample;
  return AddTask(std::move(task));
}

std::string AnnotationQueue::AddComparisonTask(const Sample& sample,
                                               std::string output_a,
                                               std::string output_b) {
  AnnotationTask task;
  task.kind = AnnotationKind::kComparison;
  task.payload = sample;
  task.output_a = std::move(output_a);
  task.output_b = std::move(output_b);
  return AddTask(std::move(task));
}

std::optional<AnnotationTask> AnnotationQueue::Next(
    std::optional<AnnotationKind> kind) {
  std::unique_lock lock(mutex_);
  const auto now = std::chrono::steady_clock::now();
  for (AnnotationTask& task : tasks_) {
    if (task.status == TaskStatus::kLeased && task.lease_expiry <= now) {
      task.status = TaskStatus::kOpen;
    }
    if (task.status != TaskStatus::kOpen) continue;
    if (kind && task.kind != *kind) continue;
    task.status = TaskStatus::kLeased;
    task.lease_expiry = now + options_.lease;
    return task;
  }
  return std::nullopt;
}

namespace {

std::optional<std::string> NonEmptyString(const Json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || !it->is_string()) return std::nullopt;
  std::string value = it->get<std::string>();
  if (Trim(value).empty()) return std::nullopt;
  return value;
}

}  // namespace

AnnotationQueue::SubmitResult AnnotationQueue::Submit(const std::string& task_id,
                                                      const Json& body) {
  std::unique_lock lock(mutex_);
  auto it = std::find_if(tasks_.begin(), tasks_.end(),
                         [&](const AnnotationTask& t) { return t.task_id == task_id; });
  if (it == tasks_.end()) return {404, "unknown task " + task_id};
  AnnotationTask& task = *it;
  if (task.status == TaskStatus::kDone) {
    if (task.submission == body) return {200, "already recorded"};
    return {409, "task " + task_id + " is already complete"};
  }
  if (task.status != TaskStatus::kLeased ||
      task.lease_expiry <= std::chrono::steady_clock::now()) {
    return {409, "task " + task_id + " is not leased"};
  }
  if (!body.is_object()) return {422, "annotation body must be an object"};
  if (auto annotator = body.find("annotator_id");
      annotator != body.end() && !annotator->is_string()) {
    return {422, "annotator_id must be a string"};
  }

  Sample updated = task.payload;
  if (auto current = std::find_if(samples_.begin(), samples_.end(),
                                  [&](const Sample& s) { return s.id == updated.id; });
      current != samples_.end()) {
    updated = *current;
  }
  switch (task.kind) {
    case AnnotationKind::kComparison: {
      auto preferred = body.find("preferred");
      if (preferred == body.end() || !preferred->is_string() ||
          (*preferred != "A" && *preferred != "B")) {
        return {422, "comparison needs preferred: \"A\" or \"B\""};
      }
      updated.comparison = Comparison{
          task.output_a, task.output_b,
          *preferred == "A" ? Preferred::kA : Preferred::kB};
      break;
    }
    case AnnotationKind::kFeedback: {
      auto text = NonEmptyString(body, "text");
      if (!text) return {422, "feedback needs non-empty text"};
      auto category = body.find("category");
      if (category == body.end() || !category->is_string()) {
        return {422, "feedback needs a category"};
      }
      try {
        updated.feedback_category =
            ParseFeedbackCategory(category->get<std::string>());
      } catch (const Error& e) {
        return {422, e.what()};
      }
      if (auto more = body.find("more_feedback");
          more != body.end() && !more->is_boolean()) {
        return {422, "more_feedback must be a boolean"};
      }
      updated.feedback = *text;
      break;
    }
    case AnnotationKind::kIdealSummary: {
      auto text = NonEmptyString(body, "text");
      if (!text) return {422, "ideal summary needs non-empty text"};
      const size_t tokens = CountTokens(*text);
      if (tokens > static_cast<size_t>(options_.token_budget)) {
        return {422, "ideal summary has " + std::to_string(tokens) +
                         " tokens; the budget is " +
                         std::to_string(options_.token_budget)};
      }
      updated.ideal_output = *text;
      break;
    }
  }
  UpsertSample(updated);
  task.payload = updated;
  task.status = TaskStatus::kDone;
  task.submission = body;
  PersistLocked(task);
  done_.notify_all();
  return {200, "recorded"};
}

AnnotationQueue::SubmitResult AnnotationQueue::Renew(const std::string& task_id) {
  std::unique_lock lock(mutex_);
  auto it = std::find_if(tasks_.begin(), tasks_.end(),
                         [&](const AnnotationTask& t) { return t.task_id == task_id; });
  if (it == tasks_.end()) return {404, "unknown task " + task_id};
  const auto now = std::chrono::steady_clock::now();
  if (it->status != TaskStatus::kLeased || it->lease_expiry <= now) {
    return {409, "task " + task_id + " is not leased"};
  }
  it->lease_expiry = now + options_.lease;
  return {200, "renewed"};
}

void AnnotationQueue::PersistLocked(const AnnotationTask& task) {
  if (options_.run_dir.empty()) return;
  std::filesystem::create_directories(options_.run_dir);
  const auto path = options_.run_dir / "samples.jsonl";
  const auto tmp = options_.run_dir / "samples.jsonl.tmp";
  WriteSamples(samples_, tmp);
  std::filesystem::rename(tmp, path);

  Json entry;
  entry["task_id"] = task.task_id;
  entry["kind"] = ToString(task.kind);
  entry["sample_id"] = task.payload.id;
  entry["annotation"] = task.submission;
  std::ofstream log(options_.run_dir / "annotations.jsonl",
                    std::ios::binary | std::ios::app);
  if (!log) Fail(ErrorKind::kIo, "cannot append annotations.jsonl");
  log << entry.dump() << '\n';
}

std::optional<Sample> AnnotationQueue::AwaitFeedback(
    const Sample& sample, std::chrono::milliseconds timeout) {
  std::string task_id;
  {
    std::unique_lock lock(mutex_);
    auto it = std::find_if(tasks_.begin(), tasks_.end(), [&](const AnnotationTask& t) {
      return t.kind == AnnotationKind::kFeedback && t.payload.id == sample.id;
    });
    if (it != tasks_.end()) {
      if (it->status == TaskStatus::kDone) return it->payload;
      task_id = it->task_id;
    }
  }
  if (task_id.empty()) task_id = AddFeedbackTask(sample);

  std::unique_lock lock(mutex_);
  const auto is_done = [&] {
    auto it = std::find_if(tasks_.begin(), tasks_.end(),
                           [&](const AnnotationTask& t) { return t.task_id == task_id; });
    return it != tasks_.end() && it->status == TaskStatus::kDone;
  };
  if (!done_.wait_for(lock, timeout, is_done)) return std::nullopt;
  auto it = std::find_if(tasks_.begin(), tasks_.end(),
                         [&](const AnnotationTask& t) { return t.task_id == task_id; });
  return it->payload;
}

std::vector<Sample> AnnotationQueue::Samples() const {
  std::shared_lock lock(mutex_);
  return samples_;
}

std::optional<AnnotationTask> AnnotationQueue::Find(
    const std::string& task_id) const {
  std::shared_lock lock(mutex_);
  for (const AnnotationTask& task : tasks_) {
    if (task.task_id == task_id) return task;
  }
  return std::nullopt;
}

size_t AnnotationQueue::open_count() const {
  std::shared_lock lock(mutex_);
  return static_cast<size_t>(std::count_if(
      tasks_.begin(), tasks_.end(),
      [](const AnnotationTask& t) { return t.status != TaskStatus::kDone; }));
}

// ---------------------------------------------------------------------------

namespace {

void SendJson(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, const std::string& message) {
  SendJson(res, status, Json{{"error", message}});
}

std::optional<Json> ParseBody(const httplib::Request& req,
                              httplib::Response& res) {
  if (!IsValidUtf8(req.body)) {
    SendError(res, 400, "request body is not valid UTF-8");
    return std::nullopt;
  }
  try {
    return Json::parse(req.body);
  } catch (const Json::exception& e) {
    SendError(res, 400, std::string("malformed JSON: ") + e.what());
    return std::nullopt;
  }
}

}  // namespace

AnnotationServer::AnnotationServer(std::shared_ptr<AnnotationQueue> queue,
                                   std::string bearer_token)
    : queue_(std::move(queue)),
      bearer_token_(std::move(bearer_token)),
      server_(std::make_unique<httplib::Server>()) {
  server_->set_pre_routing_handler(
      [this](const httplib::Request& req, httplib::Response& res) {
        if (bearer_token_.empty()) return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("Authorization") == "Bearer " + bearer_token_) {
          return httplib::Server::HandlerResponse::Unhandled;
        }
        SendError(res, 401, "missing or invalid bearer token");
        return httplib::Server::HandlerResponse::Handled;
      });

  server_->Get("/tasks/next",
               [this](const httplib::Request& req, httplib::Response& res) {
                 std::optional<AnnotationKind> kind;
                 if (req.has_param("kind")) {
                   kind = ParseAnnotationKind(req.get_param_value("kind"));
                   if (!kind) {
                     SendError(res, 400, "invalid kind '" +
                                             req.get_param_value("kind") + "'");
                     return;
                   }
                 }
                 auto task = queue_->Next(kind);
                 if (!task) {
                   res.status = 204;
                   return;
                 }
                 SendJson(res, 200, ToJson(*task));
               });

  server_->Post(R"(/tasks/([^/]+)/annotation)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  auto body = ParseBody(req, res);
                  if (!body) return;
                  const auto result = queue_->Submit(req.matches[1], *body);
                  if (result.status == 200) {
                    SendJson(res, 200, Json{{"status", "ok"},
                                            {"message", result.message}});
                  } else {
                    SendError(res, result.status, result.message);
                  }
                });

  server_->Post(R"(/tasks/([^/]+)/lease)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const auto result = queue_->Renew(req.matches[1]);
                  if (result.status == 200) {
                    SendJson(res, 200, Json{{"status", "ok"}});
                  } else {
                    SendError(res, result.status, result.message);
                  }
                });

  server_->Post("/tokenize",
                [](const httplib::Request& req, httplib::Response& res) {
                  auto body = ParseBody(req, res);
                  if (!body) return;
                  auto text = body->find("text");
                  if (!body->is_object() || text == body->end() ||
                      !text->is_string()) {
                    SendError(res, 400, "body must be {\"text\": string}");
                    return;
                  }
                  SendJson(res, 200,
                           Json{{"count", CountTokens(text->get<std::string>())}});
                });
}

AnnotationServer::~AnnotationServer() { Stop(); }

int AnnotationServer::BindToAnyPort(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool AnnotationServer::Bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port);
}

bool AnnotationServer::ListenAfterBind() { return server_->listen_after_bind(); }

void AnnotationServer::Stop() {
  if (server_) server_->stop();
}

void AnnotationServer::WaitUntilReady() const { server_->wait_until_ready(); }

}  // namespace ilf
