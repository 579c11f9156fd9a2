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

#include "ilf/ilf_loop.h"

#include <fstream>
#include <sstream>

#include "ilf/error.h"
#include "ilf/mock_backends.h"
#include "ilf/parallel.h"
#include "ilf/refine.h"
#include "ilf/text.h"

namespace ilf {

FileFeedbackProvider::FileFeedbackProvider(std::span<const Sample> samples) {
  for (const Sample& sample : samples) {
    if (Trim(sample.feedback).empty()) {
      Fail(ErrorKind::kValidation,
           "sample '" + sample.id + "' has no feedback in the samples file");
    }
    feedback_[sample.id] = {sample.feedback, sample.feedback_category};
  }
}

FeedbackResult FileFeedbackProvider::Provide(const Sample& context) const {
  auto it = feedback_.find(context.id);
  if (it == feedback_.end()) {
    Fail(ErrorKind::kValidation, "no recorded feedback for '" + context.id + "'");
  }
  return it->second;
}

OracleWordRemovalProvider::OracleWordRemovalProvider(
    std::span<const RemovalTask> tasks) {
  for (const RemovalTask& task : tasks) {
    instructions_[task.id] = RemovalInstruction(task.remove_words);
  }
}

FeedbackResult OracleWordRemovalProvider::Provide(const Sample& context) const {
  auto it = instructions_.find(context.id);
  if (it == instructions_.end()) {
    Fail(ErrorKind::kValidation, "no removal task with id '" + context.id + "'");
  }
  return {it->second, FeedbackCategory::kAccuracy};
}

QueueFeedbackProvider::QueueFeedbackProvider(
    std::shared_ptr<AnnotationQueue> queue, std::chrono::milliseconds timeout)
    : queue_(std::move(queue)), timeout_(timeout) {
  Require(queue_ != nullptr, "annotation queue is required");
}

FeedbackResult QueueFeedbackProvider::Provide(const Sample& context) const {
  // Feedback given before a restart is reused when it is about the same x0.
  for (const Sample& known : queue_->Samples()) {
    if (known.id == context.id && known.initial_output == context.initial_output &&
        !Trim(known.feedback).empty()) {
      return {known.feedback, known.feedback_category};
    }
  }
  Sample request = context;
  request.feedback.clear();
  auto answered = queue_->AwaitFeedback(request, timeout_);
  if (!answered) {
    Fail(ErrorKind::kResumableAbort,
         "timed out waiting for feedback on '" + context.id + "'");
  }
  return {answered->feedback, answered->feedback_category};
}

// ---------------------------------------------------------------------------

PolicyHandle FinetuneBackend::Restore(const std::string&) const { return nullptr; }

PolicyHandle ImitationFinetuneBackend::Train(
    const PolicyHandle& start, std::span<const FinetuneRecord> records,
    double) const {
  Require(start != nullptr, "finetuning needs a start policy");
  std::string digest_input = start->model_id();
  for (const FinetuneRecord& record : records) {
    digest_input += '\n';
    digest_input += ToJson(record).dump();
  }
  return std::make_shared<ImitationPolicy>("imitation-" + HexDigest(digest_input),
                                           records, start->Adapted(records));
}

HttpFinetuneBackend::HttpFinetuneBackend(HttpFinetuneClient client)
    : client_(std::move(client)) {}

PolicyHandle HttpFinetuneBackend::Train(const PolicyHandle& start,
                                        std::span<const FinetuneRecord> records,
                                        double lambda) const {
  return Restore(client_.Submit(start->model_id(), records, lambda));
}

PolicyHandle HttpFinetuneBackend::Restore(const std::string& model_id) const {
  HttpConfig config = client_.config();
  config.model = model_id;
  return std::make_shared<HttpPolicy>(config);
}

std::vector<FinetuneRecord> TrainingSetFor(
    FinetuneMode mode, std::span<const std::vector<FinetuneRecord>> datasets) {
  std::vector<FinetuneRecord> out;
  switch (mode) {
    case FinetuneMode::kEmitOnly:
      break;
    case FinetuneMode::kContinuous:
      if (!datasets.empty()) out = datasets.back();
      break;
    case FinetuneMode::kFromScratchConcat:
      for (const auto& dataset : datasets) {
        out.insert(out.end(), dataset.begin(), dataset.end());
      }
      break;
  }
  return out;
}

PolicyHandle Finetune(const FinetuneBackend& backend, const PolicyHandle& base,
                      const PolicyHandle& root,
                      std::span<const std::vector<FinetuneRecord>> datasets,
                      FinetuneMode mode, double lambda) {
  if (mode == FinetuneMode::kEmitOnly) return base;
  Require(!datasets.empty(), "finetuning needs at least one dataset");
  const auto records = TrainingSetFor(mode, datasets);
  Require(!records.empty(), "finetuning dataset is empty");
  return backend.Train(mode == FinetuneMode::kContinuous ? base : root, records,
                       lambda);
}

std::string Provenance(const std::string& base_provenance, int k,
                       FinetuneMode mode) {
  switch (mode) {
    case FinetuneMode::kEmitOnly:
      return base_provenance;
    case FinetuneMode::kContinuous:
      return base_provenance + ">D_" + std::to_string(k);
    case FinetuneMode::kFromScratchConcat: {
      std::string out = "root>";
      for (int i = 1; i <= k; ++i) {
        if (i > 1) out += '+';
        out += "D_" + std::to_string(i);
      }
      return out;
    }
  }
  return base_provenance;
}

// ---------------------------------------------------------------------------

std::string_view ToString(TaskFormat format) {
  return format == TaskFormat::kWordRemoval ? "word_removal" : "summarization";
}

TaskFormat ParseTaskFormat(std::string_view name) {
  if (name == "summarization") return TaskFormat::kSummarization;
  if (name == "word_removal") return TaskFormat::kWordRemoval;
  Fail(ErrorKind::kValidation, "unknown task format '" + std::string(name) + "'");
}

std::string PolicyPrompt(TaskFormat format, const TemplateSet& templates,
                         const Sample& context) {
  const TemplateId id = format == TaskFormat::kWordRemoval
                            ? TemplateId::kWordRemoval
                            : TemplateId::kInitialSummary;
  return RenderPrompt(templates.Get(id), context);
}

std::string RefinementPrompt(TaskFormat format, const TemplateSet& templates,
                             const Sample& context) {
  const TemplateId id = format == TaskFormat::kWordRemoval
                            ? TemplateId::kWordRemoval
                            : TemplateId::kRefineWithFeedback;
  return RenderPrompt(templates.Get(id), context);
}

std::vector<FinetuneRecord> FinetuneRecordsFor(const std::string& prompt,
                                               const RefinementSet& set,
                                               const Beta& beta) {
  std::vector<FinetuneRecord> records;
  if (beta.is_infinite()) {
    const std::string& chosen = set.selected();
    if (chosen.empty()) {
      Fail(ErrorKind::kSelection,
           "selected refinement of '" + set.sample_id + "' is empty");
    }
    records.push_back({prompt, " " + chosen, 1.0});
    return records;
  }
  Require(set.weights.size() == set.candidates.size(),
          "refinement set '" + set.sample_id + "' has no weights");
  for (size_t i = 0; i < set.candidates.size(); ++i) {
    if (set.weights[i] <= kWeightFloor || set.candidates[i].empty()) continue;
    records.push_back({prompt, " " + set.candidates[i], std::min(1.0, set.weights[i])});
  }
  return records;
}

Json ToJson(const IterationMetrics& metrics) {
  Json json;
  json["iteration"] = metrics.iteration;
  json["contexts"] = metrics.contexts;
  json["records"] = metrics.records;
  json["mean_selected_score"] = metrics.mean_selected_score;
  json["model_id"] = metrics.model_id;
  json["provenance"] = metrics.provenance;
  return json;
}

namespace {

IterationMetrics MetricsFromJson(const Json& json) {
  IterationMetrics metrics;
  metrics.iteration = json.at("iteration").get<int>();
  metrics.contexts = json.at("contexts").get<size_t>();
  metrics.records = json.at("records").get<size_t>();
  metrics.mean_selected_score = json.at("mean_selected_score").get<double>();
  metrics.model_id = json.at("model_id").get<std::string>();
  metrics.provenance = json.at("provenance").get<std::string>();
  return metrics;
}

struct ContextResult {
  Sample sample;  // with x0 and feedback filled in
  RefinementSet refinements;
  std::vector<FinetuneRecord> records;
};

std::string IterationDir(int k) { return "iter_" + std::to_string(k); }

void AppendLine(const std::filesystem::path& path, const Json& row) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) Fail(ErrorKind::kIo, "cannot append to " + path.string());
  out << row.dump() << '\n';
}

ContextResult ProcessContext(const IterationState& state, const Sample& context,
                             int iteration, const RunConfig& config,
                             const IlfEnvironment& env) {
  const uint64_t context_seed =
      MixSeed(MixSeed(MixSeed(config.seed, "sampling"),
                      static_cast<uint64_t>(iteration)),
              context.id);
  ContextResult result;
  result.sample = context;

  const std::string prompt = PolicyPrompt(env.format, *env.templates, context);
  SamplingParams initial = config.sampling;
  initial.seed = MixSeed(context_seed, "initial");
  const auto raw = Generate(*state.policy, prompt, initial, 1);
  result.sample.initial_output = Postprocess(raw.front(), initial.max_tokens);

  const FeedbackResult feedback = env.feedback->Provide(result.sample);
  if (Trim(feedback.text).empty()) {
    Fail(ErrorKind::kValidation, "empty feedback for '" + context.id + "'");
  }
  result.sample.feedback = feedback.text;
  result.sample.feedback_category = feedback.category;

  const PolicyHandle& refiner = env.refiner ? env.refiner : state.policy;
  SamplingParams refine = config.sampling;
  refine.seed = MixSeed(context_seed, "refine");
  const std::string refine_prompt =
      RefinementPrompt(env.format, *env.templates, result.sample);
  RefinementSet& set = result.refinements;
  set.sample_id = context.id;
  for (const std::string& candidate :
       Generate(*refiner, refine_prompt, refine, config.n)) {
    set.candidates.push_back(Postprocess(candidate, refine.max_tokens));
  }
  ScoreAndSelect(set, result.sample, *env.scorer, config.beta);

  result.records = FinetuneRecordsFor(prompt, set, config.beta);
  return result;
}

}  // namespace

IterationState RunIteration(const IterationState& state,
                            std::span<const Sample> contexts,
                            const RunConfig& config, const IlfEnvironment& env) {
  Require(state.policy != nullptr, "iteration needs a current policy");
  Require(env.scorer && env.feedback && env.finetune && env.templates,
          "iteration environment is incomplete");
  Require(!contexts.empty(), "iteration needs at least one context");
  Require(!env.run_dir.empty(), "iteration needs a run directory");

  const int iteration = state.k + 1;
  const std::filesystem::path dir = env.run_dir / IterationDir(iteration);
  std::filesystem::create_directories(dir);

  auto outcomes = ParallelTry(contexts.size(), config.max_parallel, [&](size_t i) {
    return ProcessContext(state, contexts[i], iteration, config, env);
  });

  std::vector<Sample> samples;
  std::vector<RefinementSet> sets;
  std::vector<FinetuneRecord> records;
  std::vector<std::string> failures;
  for (size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].error) {
      try {
        std::rethrow_exception(outcomes[i].error);
      } catch (const std::exception& e) {
        failures.push_back(contexts[i].id + ": " + e.what());
      }
      continue;
    }
    const ContextResult& result = *outcomes[i].value;
    samples.push_back(result.sample);
    sets.push_back(result.refinements);
    records.insert(records.end(), result.records.begin(), result.records.end());
  }

  if (!failures.empty()) {
    WriteSamples(samples, dir / "samples.partial.jsonl");
    WriteRefinements(sets, dir / "refinements.partial.jsonl");
    WriteFinetuneDataset(records, dir / "finetune.partial.jsonl");
    std::string message = "iteration " + std::to_string(iteration) + " aborted after " +
                          std::to_string(samples.size()) + " of " +
                          std::to_string(contexts.size()) +
                          " contexts; rerun with resume to continue";
    for (const std::string& failure : failures) message += "\n  " + failure;
    Fail(ErrorKind::kResumableAbort, message);
  }
  for (const char* name : {"samples.partial.jsonl", "refinements.partial.jsonl",
                           "finetune.partial.jsonl"}) {
    std::filesystem::remove(dir / name);
  }

  WriteSamples(samples, dir / "samples.jsonl");
  WriteRefinements(sets, dir / "refinements.jsonl");
  WriteFinetuneDataset(records, dir / "finetune.jsonl");

  IterationState next = state;
  next.k = iteration;
  next.datasets.push_back(IterationDir(iteration) + "/finetune.jsonl");

  std::vector<std::vector<FinetuneRecord>> datasets;
  for (const std::string& path : next.datasets) {
    datasets.push_back(LoadFinetuneDataset(env.run_dir / path));
  }
  next.policy = Finetune(*env.finetune, state.policy, env.root, datasets,
                         config.finetune_mode, config.lambda);
  next.provenance = Provenance(state.provenance, iteration, config.finetune_mode);

  IterationMetrics metrics;
  metrics.iteration = iteration;
  metrics.contexts = contexts.size();
  metrics.records = records.size();
  double total = 0.0;
  for (const RefinementSet& set : sets) total += set.scores[set.selected_index];
  metrics.mean_selected_score = total / static_cast<double>(sets.size());
  metrics.model_id = next.policy->model_id();
  metrics.provenance = next.provenance;
  next.metrics.push_back(metrics);

  std::vector<Json> metric_rows;
  for (const RefinementSet& set : sets) {
    Json row;
    row["sample_id"] = set.sample_id;
    row["selected_index"] = set.selected_index;
    row["selected_score"] = set.scores[set.selected_index];
    metric_rows.push_back(std::move(row));
  }
  metric_rows.push_back(Json{{"summary", ToJson(metrics)}});
  WriteJsonLines(dir / "metrics.jsonl", metric_rows);

  Json checkpoint = ToJson(metrics);
  checkpoint["datasets"] = next.datasets;
  AppendLine(env.run_dir / "state.jsonl", checkpoint);
  return next;
}

IterationState RunIlf(const RunConfig& config,
                      std::span<const std::vector<Sample>> partitions,
                      const IlfEnvironment& env, bool resume) {
  config.Validate();
  Require(env.root != nullptr, "run needs a root policy");
  Require(!env.run_dir.empty(), "run needs a run directory");
  Require(static_cast<int>(partitions.size()) == config.iterations,
          "expected " + std::to_string(config.iterations) +
              " context partitions, got " + std::to_string(partitions.size()));
  for (const auto& partition : partitions) {
    Require(!partition.empty(), "every context partition needs at least one sample");
  }

  std::filesystem::create_directories(env.run_dir);
  const auto config_path = env.run_dir / "run_config.json";
  const auto state_path = env.run_dir / "state.jsonl";
  const std::string snapshot = config.ToJson().dump(2) + "\n";

  IterationState state;
  state.policy = env.root;
  if (resume && std::filesystem::exists(config_path)) {
    if (ReadTextFile(config_path) != snapshot) {
      Fail(ErrorKind::kValidation,
           "run_config.json differs from the current configuration; refusing to resume");
    }
    std::vector<Json> checkpoints;
    if (std::filesystem::exists(state_path)) checkpoints = ReadJsonLines(state_path);
    std::vector<std::vector<FinetuneRecord>> datasets;
    for (const Json& checkpoint : checkpoints) {
      IterationMetrics metrics = MetricsFromJson(checkpoint);
      const int k = metrics.iteration;
      if (k != state.k + 1) {
        Fail(ErrorKind::kValidation, "state.jsonl is out of order at iteration " +
                                         std::to_string(k));
      }
      const std::string dataset = IterationDir(k) + "/finetune.jsonl";
      state.datasets.push_back(dataset);
      datasets.push_back(LoadFinetuneDataset(env.run_dir / dataset));
      PolicyHandle restored = config.finetune_mode == FinetuneMode::kEmitOnly
                                  ? state.policy
                                  : env.finetune->Restore(metrics.model_id);
      if (!restored) {
        restored = Finetune(*env.finetune, state.policy, env.root, datasets,
                            config.finetune_mode, config.lambda);
      }
      if (restored->model_id() != metrics.model_id) {
        Fail(ErrorKind::kValidation,
             "replayed iteration " + std::to_string(k) + " produced model '" +
                 restored->model_id() + "', checkpoint recorded '" +
                 metrics.model_id + "'");
      }
      state.policy = restored;
      state.provenance = metrics.provenance;
      state.k = k;
      state.metrics.push_back(std::move(metrics));
    }
  } else {
    WriteTextFile(config_path, snapshot);
    std::filesystem::remove(state_path);
  }

  while (state.k < config.iterations) {
    state = RunIteration(state, partitions[static_cast<size_t>(state.k)], config, env);
  }
  return state;
}

}  // namespace ilf
