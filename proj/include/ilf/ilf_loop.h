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

#ifndef ILF_ILF_LOOP_H_
#define ILF_ILF_LOOP_H_

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ilf/annotate.h"
#include "ilf/backend.h"
#include "ilf/core.h"
#include "ilf/http_backend.h"
#include "ilf/select.h"
#include "ilf/templates.h"
#include "ilf/wordremoval.h"

namespace ilf {

// ---------------------------------------------------------------------------
// Feedback providers.

struct FeedbackResult {
  std::string text;
  FeedbackCategory category = FeedbackCategory::kOther;
};

class FeedbackProvider {
 public:
  virtual ~FeedbackProvider() = default;
  virtual std::string name() const = 0;
  // Feedback on `context` whose initial_output holds the sampled x0.
  virtual FeedbackResult Provide(const Sample& context) const = 0;
};

// Feedback recorded in a samples file, keyed by sample id.
class FileFeedbackProvider : public FeedbackProvider {
 public:
  explicit FileFeedbackProvider(std::span<const Sample> samples);
  std::string name() const override { return "file"; }
  FeedbackResult Provide(const Sample& context) const override;

 private:
  std::map<std::string, FeedbackResult, std::less<>> feedback_;
};

// The removal instruction of each word-removal task.
class OracleWordRemovalProvider : public FeedbackProvider {
 public:
  explicit OracleWordRemovalProvider(std::span<const RemovalTask> tasks);
  std::string name() const override { return "oracle_word_removal"; }
  FeedbackResult Provide(const Sample& context) const override;

 private:
  std::map<std::string, std::string, std::less<>> instructions_;
};

// Posts a feedback task and blocks until an annotator answers it. A timeout
// is a kResumableAbort.
class QueueFeedbackProvider : public FeedbackProvider {
 public:
  QueueFeedbackProvider(std::shared_ptr<AnnotationQueue> queue,
                        std::chrono::milliseconds timeout);
  std::string name() const override { return "annotation_queue"; }
  FeedbackResult Provide(const Sample& context) const override;

 private:
  std::shared_ptr<AnnotationQueue> queue_;
  std::chrono::milliseconds timeout_;
};

// ---------------------------------------------------------------------------
// Finetuning.

class FinetuneBackend {
 public:
  virtual ~FinetuneBackend() = default;
  virtual std::string name() const = 0;
  virtual PolicyHandle Train(const PolicyHandle& start,
                             std::span<const FinetuneRecord> records,
                             double lambda) const = 0;
  // Policy for a model id recorded by an earlier run; nullptr when the
  // backend can only rebuild it by training again.
  virtual PolicyHandle Restore(const std::string& model_id) const;
};

// Exact prompt -> completion lookup over an adapted copy of the start policy.
class ImitationFinetuneBackend : public FinetuneBackend {
 public:
  std::string name() const override { return "imitation"; }
  PolicyHandle Train(const PolicyHandle& start,
                     std::span<const FinetuneRecord> records,
                     double lambda) const override;
};

class HttpFinetuneBackend : public FinetuneBackend {
 public:
  explicit HttpFinetuneBackend(HttpFinetuneClient client);
  std::string name() const override { return "http"; }
  PolicyHandle Train(const PolicyHandle& start,
                     std::span<const FinetuneRecord> records,
                     double lambda) const override;
  PolicyHandle Restore(const std::string& model_id) const override;

 private:
  HttpFinetuneClient client_;
};

// Records a mode trains on: the newest dataset (continuous), all of them
// concatenated (from_scratch_concat) or none (emit_only).
std::vector<FinetuneRecord> TrainingSetFor(
    FinetuneMode mode, std::span<const std::vector<FinetuneRecord>> datasets);

// Continuous mode trains from `base`, from_scratch_concat from `root`;
// emit_only returns `base`.
PolicyHandle Finetune(const FinetuneBackend& backend, const PolicyHandle& base,
                      const PolicyHandle& root,
                      std::span<const std::vector<FinetuneRecord>> datasets,
                      FinetuneMode mode, double lambda);

// "root>D_1>D_2" for continuous training, "root>D_1+D_2" for concatenation.
std::string Provenance(const std::string& base_provenance, int k,
                       FinetuneMode mode);

// ---------------------------------------------------------------------------
// The loop.

enum class TaskFormat { kSummarization, kWordRemoval };

std::string_view ToString(TaskFormat format);
TaskFormat ParseTaskFormat(std::string_view name);

// Prompt on which the policy produces x0 and which finetuning targets.
std::string PolicyPrompt(TaskFormat format, const TemplateSet& templates,
                         const Sample& context);
// Prompt that asks the refiner to apply the feedback to x0.
std::string RefinementPrompt(TaskFormat format, const TemplateSet& templates,
                             const Sample& context);

// Finetune records for one scored set: the selected candidate with weight 1
// for infinite beta, otherwise every non-empty candidate with weight > 0.
// Completions are the candidates with a leading space.
std::vector<FinetuneRecord> FinetuneRecordsFor(const std::string& prompt,
                                               const RefinementSet& set,
                                               const Beta& beta);

struct IlfEnvironment {
  PolicyHandle root;     // pi_theta before the first iteration
  PolicyHandle refiner;  // pi_psi; null refines with the current policy
  std::shared_ptr<const Scorer> scorer;
  std::shared_ptr<const FeedbackProvider> feedback;
  std::shared_ptr<const FinetuneBackend> finetune;
  std::shared_ptr<const TemplateSet> templates;
  TaskFormat format = TaskFormat::kSummarization;
  std::filesystem::path run_dir;
};

struct IterationMetrics {
  int iteration = 0;
  size_t contexts = 0;
  size_t records = 0;
  double mean_selected_score = 0.0;
  std::string model_id;
  std::string provenance;
};

Json ToJson(const IterationMetrics& metrics);

struct IterationState {
  int k = 0;
  PolicyHandle policy;
  std::string provenance = "root";
  // Finetune datasets D_1..D_k relative to the run directory.
  std::vector<std::string> datasets;
  std::vector<IterationMetrics> metrics;
};

// One pass of the loop over `contexts`, written to iter_{k+1}/. Appends a
// checkpoint line to state.jsonl once the iteration is complete.
IterationState RunIteration(const IterationState& state,
                            std::span<const Sample> contexts,
                            const RunConfig& config, const IlfEnvironment& env);

// Runs partitions C_1..C_K in order. With `resume`, the iterations recorded in
// state.jsonl are restored and the remaining ones run.
IterationState RunIlf(const RunConfig& config,
                      std::span<const std::vector<Sample>> partitions,
                      const IlfEnvironment& env, bool resume = false);

}  // namespace ilf

#endif  // ILF_ILF_LOOP_H_
