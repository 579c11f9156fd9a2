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

#ifndef ILF_ANNOTATE_H_
#define ILF_ANNOTATE_H_

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ilf/core.h"

namespace httplib {
class Server;
}

namespace ilf {

enum class AnnotationKind { kComparison, kFeedback, kIdealSummary };
enum class TaskStatus { kOpen, kLeased, kDone };

std::string_view ToString(AnnotationKind kind);
std::optional<AnnotationKind> ParseAnnotationKind(std::string_view name);
std::string_view ToString(TaskStatus status);

struct AnnotationTask {
  std::string task_id;
  AnnotationKind kind = AnnotationKind::kFeedback;
  Sample payload;
  // Only for comparison tasks: the pair shown to the annotator.
  std::string output_a;
  std::string output_b;
  TaskStatus status = TaskStatus::kOpen;
  std::chrono::steady_clock::time_point lease_expiry{};
  Json submission;
};

// Wire form: {task_id, kind, status, payload}; the payload carries only the
// fields the kind needs.
Json ToJson(const AnnotationTask& task);

struct PendingComparison {
  std::string sample_id;
  std::string output_a;
  std::string output_b;
};

std::vector<PendingComparison> LoadPendingComparisons(
    const std::filesystem::path& path);

// Lease-based queue of annotation tasks. Mutations are serialised; completed
// annotations are written back into `<run_dir>/samples.jsonl` and logged
// once to `<run_dir>/annotations.jsonl`.
class AnnotationQueue {
 public:
  struct Options {
    std::chrono::milliseconds lease = std::chrono::minutes(10);
    int token_budget = 48;
    std::filesystem::path run_dir;  // empty: keep everything in memory
  };

  struct SubmitResult {
    int status = 200;
    std::string message;
  };

  explicit AnnotationQueue(Options options, std::vector<Sample> samples = {});

  // Builds the queue from a run directory: feedback tasks for samples with
  // empty feedback, ideal-summary tasks for samples without one, comparison
  // tasks from comparisons_pending.jsonl.
  static std::shared_ptr<AnnotationQueue> FromRunDir(Options options);

  std::string AddFeedbackTask(const Sample& sample);
  std::string AddIdealSummaryTask(const Sample& sample);
  std::string AddComparisonTask(const Sample& sample, std::string output_a,
                                std::string output_b);

  // Leases the oldest open task (of `kind` if given).
  std::optional<AnnotationTask> Next(std::optional<AnnotationKind> kind);

  SubmitResult Submit(const std::string& task_id, const Json& body);

  // Extends the lease of a task still held: 200, 404 or 409.
  SubmitResult Renew(const std::string& task_id);

  // Enqueues a feedback task for `sample` and blocks until it is annotated.
  // nullopt on timeout.
  std::optional<Sample> AwaitFeedback(const Sample& sample,
                                      std::chrono::milliseconds timeout);

  std::vector<Sample> Samples() const;
  std::optional<AnnotationTask> Find(const std::string& task_id) const;
  size_t open_count() const;
  int token_budget() const { return options_.token_budget; }

 private:
  std::string AddTask(AnnotationTask task);
  void UpsertSample(const Sample& sample);
  void PersistLocked(const AnnotationTask& task);

  Options options_;
  mutable std::shared_mutex mutex_;
  std::condition_variable_any done_;
  std::vector<Sample> samples_;
  std::vector<AnnotationTask> tasks_;
  size_t next_id_ = 1;
};

// HTTP front end:
//   GET  /tasks/next?kind=K          -> 200 task | 204 | 400
//   POST /tasks/{id}/annotation      -> 200 | 404 | 409 | 422
//   POST /tasks/{id}/lease           -> 200 | 404 | 409
//   POST /tokenize {text}            -> 200 {count} | 400
// Every request must carry "Authorization: Bearer <token>" when a token is
// configured.
class AnnotationServer {
 public:
  AnnotationServer(std::shared_ptr<AnnotationQueue> queue,
                   std::string bearer_token = {});
  ~AnnotationServer();

  int BindToAnyPort(const std::string& host = "127.0.0.1");
  bool Bind(const std::string& host, int port);
  // Blocks until Stop().
  bool ListenAfterBind();
  void Stop();
  void WaitUntilReady() const;

 private:
  std::shared_ptr<AnnotationQueue> queue_;
  std::string bearer_token_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace ilf

#endif  // ILF_ANNOTATE_H_
