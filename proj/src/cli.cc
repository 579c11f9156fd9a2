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

#include "ilf/cli.h"

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <pthread.h>

#include "CLI11.hpp"
#include "ilf/annotate.h"
#include "ilf/error.h"
#include "ilf/eval.h"
#include "ilf/factory.h"
#include "ilf/ilf_loop.h"
#include "ilf/mock_backends.h"
#include "ilf/parallel.h"
#include "ilf/refine.h"
#include "ilf/select.h"
#include "ilf/templates.h"
#include "ilf/wordremoval.h"

namespace ilf {
namespace {

std::string Fixed(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
  return buffer;
}

// Flags shared by the subcommands that build a run configuration.
struct CommonFlags {
  std::string config;
  std::string run_dir;
  std::optional<uint64_t> seed;
  std::string backend;
  std::string scorer;
  std::optional<int> n;
  std::string beta;
  std::optional<int> iterations;
  std::string mode;
};

void AddConfigFlag(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config, "Run configuration (JSON)");
}

void AddSeedFlag(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--seed", flags.seed, "Random seed");
}

void AddBackendFlag(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--backend", flags.backend,
                  "Policy backend kind, or a backend JSON file");
}

void AddRunFlags(CLI::App* sub, CommonFlags& flags) {
  AddConfigFlag(sub, flags);
  AddSeedFlag(sub, flags);
  AddBackendFlag(sub, flags);
  sub->add_option("--scorer", flags.scorer,
                  "instructrm_ensemble, instructrm_single, embedding_similarity, "
                  "max_length or random");
  sub->add_option("--n", flags.n, "Refinements per context");
  sub->add_option("--beta", flags.beta, "Importance-weight inverse temperature");
}

BackendSpec BackendFromFlag(const std::string& value, BackendSpec base) {
  if (value.ends_with(".json")) {
    return BackendSpec::FromJson(Json::parse(ReadTextFile(value)));
  }
  base.kind = value;
  return base;
}

RunConfig BuildConfig(const CommonFlags& flags) {
  RunConfig config =
      flags.config.empty() ? RunConfig{} : RunConfig::Load(flags.config);
  if (flags.seed) config.seed = *flags.seed;
  if (!flags.backend.empty()) {
    config.backend = BackendFromFlag(flags.backend, config.backend);
  }
  if (!flags.scorer.empty()) config.scorer.kind = flags.scorer;
  if (flags.n) config.n = *flags.n;
  if (!flags.beta.empty()) config.beta = Beta::Parse(flags.beta);
  if (flags.iterations) config.iterations = *flags.iterations;
  if (!flags.mode.empty()) config.finetune_mode = ParseFinetuneMode(flags.mode);
  config.Validate();
  return config;
}

std::shared_ptr<const TemplateSet> Templates(const RunConfig& config) {
  if (config.templates_dir.empty()) return std::make_shared<TemplateSet>();
  return std::make_shared<TemplateSet>(TemplateSet::Load(config.templates_dir));
}

const BackendSpec& ScoringBackend(const RunConfig& config) {
  return config.refinement_backend ? *config.refinement_backend : config.backend;
}

std::shared_ptr<const Scorer> BuildScorer(const RunConfig& config,
                                          std::shared_ptr<const TemplateSet> templates,
                                          PolicyHandle policy) {
  ScorerDeps deps;
  if (config.scorer.kind.starts_with("instructrm")) {
    deps.policy = policy ? policy : MakePolicy(ScoringBackend(config));
  }
  deps.templates = std::move(templates);
  deps.embedder = MakeEmbedder(config.scorer, ScoringBackend(config));
  deps.seed = MixSeed(config.seed, "scorer");
  deps.max_parallel = config.max_parallel;
  return MakeScorer(config.scorer, deps);
}

// Reads from `in` when the path is "-".
template <typename Loader, typename StreamLoader>
auto LoadFrom(const std::string& path, std::istream& in, Loader load,
              StreamLoader load_stream) {
  if (path == "-") return load_stream(in);
  return load(path);
}

std::vector<Sample> ReadSamples(const std::string& path, std::istream& in) {
  return LoadFrom(
      path, in, [](const std::string& p) { return LoadSamples(p); },
      [](std::istream& s) { return LoadSamples(s); });
}

std::vector<RemovalTask> ReadTasks(const std::string& path, std::istream& in) {
  return LoadFrom(
      path, in, [](const std::string& p) { return LoadTasks(p); },
      [](std::istream& s) { return LoadTasks(s); });
}

std::vector<RankingSheet> ReadRankings(const std::string& path, std::istream& in) {
  return LoadFrom(
      path, in, [](const std::string& p) { return LoadRankings(p); },
      [](std::istream& s) { return LoadRankings(s); });
}

// Writes JSON lines to a file, or to `out` for "-".
void EmitRows(const std::string& path, std::span<const Json> rows,
              std::ostream& out) {
  if (path == "-") {
    for (const Json& row : rows) out << row.dump() << '\n';
    return;
  }
  WriteJsonLines(path, rows);
}

template <typename T>
std::vector<Json> ToRows(std::span<const T> items) {
  std::vector<Json> rows;
  rows.reserve(items.size());
  for (const T& item : items) rows.push_back(ToJson(item));
  return rows;
}

std::vector<std::string> PolicyPredictions(const Policy& policy,
                                           std::span<const RemovalTask> tasks,
                                           const RunConfig& config) {
  return ParallelMap(tasks.size(), config.max_parallel, [&](size_t i) {
    SamplingParams params = config.sampling;
    params.seed = MixSeed(MixSeed(config.seed, "wordeval"), tasks[i].id);
    const auto raw = Generate(policy, BuildRemovalPrompt(tasks[i]), params, 1);
    return Postprocess(raw.front(), params.max_tokens);
  });
}

void PrintMatchReport(const ExactMatchReport& report, std::ostream& out) {
  out << "accuracy " << FormatPercent(report.overall.accuracy, report.overall.se)
      << " (n=" << report.overall.n << ")\n";
  for (const auto& [l, stats] : report.per_l) {
    out << "  l=" << l << "  " << FormatPercent(stats.accuracy, stats.se)
        << " (n=" << stats.n << ")\n";
  }
}

std::vector<std::vector<Sample>> Partition(std::span<const Sample> contexts,
                                           int parts) {
  Require(static_cast<int>(contexts.size()) >= parts,
          "need at least one context per iteration: " +
              std::to_string(contexts.size()) + " contexts for " +
              std::to_string(parts) + " iterations");
  std::vector<std::vector<Sample>> out(static_cast<size_t>(parts));
  const size_t total = contexts.size();
  size_t begin = 0;
  for (size_t p = 0; p < out.size(); ++p) {
    const size_t end = total * (p + 1) / out.size();
    out[p].assign(contexts.begin() + static_cast<std::ptrdiff_t>(begin),
                  contexts.begin() + static_cast<std::ptrdiff_t>(end));
    begin = end;
  }
  return out;
}

std::string ServeToken(const RunConfig& config, bool insecure) {
  const char* token = std::getenv(config.serve.token_env.c_str());
  if (token != nullptr && *token != '\0') return token;
  if (!insecure) {
    Fail(ErrorKind::kValidation, "environment variable " + config.serve.token_env +
                                     " is not set; pass --insecure to serve "
                                     "without authentication");
  }
  return {};
}

AnnotationQueue::Options QueueOptions(const RunConfig& config,
                                      const std::string& run_dir) {
  AnnotationQueue::Options options;
  options.lease = std::chrono::milliseconds(
      static_cast<int64_t>(config.serve.lease_minutes * 60'000.0));
  options.token_budget = config.sampling.max_tokens;
  options.run_dir = run_dir;
  return options;
}

// Blocks SIGINT/SIGTERM in every thread started afterwards and waits for one.
class SignalWaiter {
 public:
  SignalWaiter() {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set_, &previous_);
  }
  ~SignalWaiter() { pthread_sigmask(SIG_SETMASK, &previous_, nullptr); }
  void Wait() {
    int signal = 0;
    sigwait(&set_, &signal);
  }

 private:
  sigset_t set_;
  sigset_t previous_;
};

// Stops the server before the listener thread is joined.
struct BackgroundServer {
  std::unique_ptr<AnnotationServer> server;
  std::jthread listener;

  ~BackgroundServer() {
    if (server) server->Stop();
  }
};

int ExitCodeFor(const Error& e) {
  return e.is_validation() ? kExitValidation : kExitRuntime;
}

}  // namespace

int Dispatch(const std::vector<std::string>& args, std::istream& in,
             std::ostream& out, std::ostream& err) {
  CLI::App app{"Imitation learning from language feedback", "ilf"};
  app.require_subcommand(1);
  app.fallthrough(false);

  std::function<int()> action;
  CommonFlags common;

  // wordgen ---------------------------------------------------------------
  auto* wordgen = app.add_subcommand("wordgen", "Generate word-removal tasks");
  std::string word_list;
  int sentences_per_k = 50;
  std::string tasks_out = "-";
  AddSeedFlag(wordgen, common);
  wordgen->add_option("--word-list", word_list, "File with one word per line");
  wordgen->add_option("--sentences-per-k", sentences_per_k,
                      "Sentences for each k in 1..10");
  wordgen->add_option("--out", tasks_out, "tasks.jsonl path, - for stdout");
  wordgen->callback([&] {
    action = [&] {
      const auto words = word_list.empty() ? DefaultWordList() : LoadWordList(word_list);
      const auto tasks = GenerateTaskSet(common.seed.value_or(0), words, sentences_per_k);
      EmitRows(tasks_out, ToRows<RemovalTask>(tasks), out);
      if (tasks_out != "-") out << "wrote " << tasks.size() << " tasks\n";
      return kExitOk;
    };
  });

  // wordeval --------------------------------------------------------------
  auto* wordeval = app.add_subcommand("wordeval", "Exact-match evaluation of word removal");
  std::string tasks_in = "-";
  bool oracle = false;
  std::string predictions_in;
  std::string results_out;
  double success_rate = -1.0;
  wordeval->add_option("tasks", tasks_in, "tasks.jsonl, - for stdin");
  wordeval->add_flag("--oracle", oracle, "Predict every target exactly");
  wordeval->add_option("--predictions", predictions_in,
                       "results.jsonl with task_id and prediction");
  wordeval->add_option("--success-rate", success_rate,
                       "Corrupt predictions down to this success rate")
      ->check(CLI::Range(0.0, 1.0));
  wordeval->add_option("--results", results_out, "Write results.jsonl here");
  AddConfigFlag(wordeval, common);
  AddSeedFlag(wordeval, common);
  AddBackendFlag(wordeval, common);
  wordeval->callback([&] {
    action = [&] {
      const auto tasks = ReadTasks(tasks_in, in);
      const RunConfig config = BuildConfig(common);
      std::vector<std::string> predictions;
      if (oracle) {
        for (const RemovalTask& task : tasks) predictions.push_back(task.target);
      } else if (!predictions_in.empty()) {
        std::map<std::string, std::string> by_id;
        for (const Json& row : ReadJsonLines(predictions_in)) {
          by_id[row.at("task_id").get<std::string>()] =
              row.at("prediction").get<std::string>();
        }
        for (const RemovalTask& task : tasks) {
          auto it = by_id.find(task.id);
          if (it == by_id.end()) {
            Fail(ErrorKind::kValidation, "no prediction for task '" + task.id + "'");
          }
          predictions.push_back(it->second);
        }
      } else {
        predictions = PolicyPredictions(*MakePolicy(config.backend), tasks, config);
      }
      if (success_rate >= 0.0) {
        predictions = CorruptPredictions(predictions, success_rate, config.seed);
      }
      const auto report = EvaluateExactMatch(predictions, tasks);
      if (!results_out.empty()) {
        std::vector<Json> rows;
        for (size_t i = 0; i < tasks.size(); ++i) {
          rows.push_back(Json{{"task_id", tasks[i].id},
                              {"prediction", predictions[i]},
                              {"match", static_cast<bool>(report.matches[i])}});
        }
        WriteJsonLines(results_out, rows);
      }
      PrintMatchReport(report, out);
      return kExitOk;
    };
  });

  // refine ----------------------------------------------------------------
  auto* refine = app.add_subcommand("refine", "Sample refinements of initial outputs");
  std::string samples_in;
  std::string refinements_out = "-";
  bool without_feedback = false;
  refine->add_option("--samples", samples_in, "samples.jsonl")->required();
  refine->add_option("--out", refinements_out, "refinements.jsonl, - for stdout");
  refine->add_flag("--no-feedback", without_feedback,
                   "Refine without showing the feedback");
  AddRunFlags(refine, common);
  refine->callback([&] {
    action = [&] {
      const RunConfig config = BuildConfig(common);
      const auto samples = ReadSamples(samples_in, in);
      const auto templates = Templates(config);
      const PolicyHandle refiner = MakePolicy(ScoringBackend(config));
      const PromptTemplate& tmpl = templates->Get(
          without_feedback ? TemplateId::kRefineWithoutFeedback
                           : TemplateId::kRefineWithFeedback);
      const auto sets = ParallelMap(samples.size(), config.max_parallel, [&](size_t i) {
        SamplingParams params = config.sampling;
        params.seed = MixSeed(MixSeed(config.seed, "refine"), samples[i].id);
        return GenerateRefinements(*refiner, tmpl, samples[i], config.n, params);
      });
      EmitRows(refinements_out, ToRows<RefinementSet>(sets), out);
      return kExitOk;
    };
  });

  // select ----------------------------------------------------------------
  auto* select = app.add_subcommand("select", "Score refinements and pick the best");
  std::string refinements_in;
  select->add_option("--samples", samples_in, "samples.jsonl")->required();
  select->add_option("--refinements", refinements_in, "refinements.jsonl")->required();
  select->add_option("--out", refinements_out, "scored refinements, - for stdout");
  AddRunFlags(select, common);
  select->callback([&] {
    action = [&] {
      const RunConfig config = BuildConfig(common);
      const auto samples = ReadSamples(samples_in, in);
      auto sets = LoadRefinements(refinements_in);
      const auto scorer = BuildScorer(config, Templates(config), nullptr);
      std::map<std::string, const Sample*> by_id;
      for (const Sample& sample : samples) by_id[sample.id] = &sample;
      for (RefinementSet& set : sets) {
        auto it = by_id.find(set.sample_id);
        if (it == by_id.end()) {
          Fail(ErrorKind::kLookup, "no sample for refinement set '" + set.sample_id + "'");
        }
        ScoreAndSelect(set, *it->second, *scorer, config.beta);
      }
      EmitRows(refinements_out, ToRows<RefinementSet>(sets), out);
      return kExitOk;
    };
  });

  // weight ----------------------------------------------------------------
  auto* weight = app.add_subcommand(
      "weight", "Reweight scored refinements and emit a finetune dataset");
  std::string dataset_out = "-";
  std::string format = "summarization";
  weight->add_option("--samples", samples_in, "samples.jsonl")->required();
  weight->add_option("--refinements", refinements_in, "scored refinements.jsonl")
      ->required();
  weight->add_option("--format", format, "summarization or word_removal");
  weight->add_option("--out", dataset_out, "finetune.jsonl, - for stdout");
  AddConfigFlag(weight, common);
  weight->add_option("--beta", common.beta, "Importance-weight inverse temperature");
  weight->callback([&] {
    action = [&] {
      const RunConfig config = BuildConfig(common);
      const TaskFormat task_format = ParseTaskFormat(format);
      const auto samples = ReadSamples(samples_in, in);
      const auto templates = Templates(config);
      std::map<std::string, const Sample*> by_id;
      for (const Sample& sample : samples) by_id[sample.id] = &sample;
      std::vector<FinetuneRecord> records;
      for (RefinementSet set : LoadRefinements(refinements_in)) {
        Require(set.scored(), "refinement set '" + set.sample_id + "' has no scores");
        auto it = by_id.find(set.sample_id);
        if (it == by_id.end()) {
          Fail(ErrorKind::kLookup, "no sample for refinement set '" + set.sample_id + "'");
        }
        ApplyWeights(set, config.beta);
        const auto more = FinetuneRecordsFor(
            PolicyPrompt(task_format, *templates, *it->second), set, config.beta);
        records.insert(records.end(), more.begin(), more.end());
      }
      EmitRows(dataset_out, ToRows<FinetuneRecord>(records), out);
      return kExitOk;
    };
  });

  // ilf-run ---------------------------------------------------------------
  auto* ilf_run = app.add_subcommand("ilf-run", "Run the ILF loop");
  std::string contexts_in;
  std::string removal_tasks_in;
  std::string eval_tasks_in;
  std::string feedback_kind;
  bool resume = false;
  double queue_timeout_s = 3600.0;
  bool insecure = false;
  AddRunFlags(ilf_run, common);
  ilf_run->add_option("--run-dir", common.run_dir, "Run directory")->required();
  ilf_run->add_option("--iterations", common.iterations, "Number of iterations K");
  ilf_run->add_option("--mode", common.mode,
                      "continuous, from_scratch_concat or emit_only");
  auto* samples_opt =
      ilf_run->add_option("--samples", contexts_in, "Summarization contexts");
  auto* tasks_opt =
      ilf_run->add_option("--tasks", removal_tasks_in, "Word-removal tasks");
  samples_opt->excludes(tasks_opt);
  ilf_run->add_option("--eval-tasks", eval_tasks_in,
                      "Word-removal tasks to score before and after the run");
  ilf_run->add_option("--feedback", feedback_kind,
                      "file, oracle_word_removal or annotation_queue");
  ilf_run->add_flag("--resume", resume, "Continue from state.jsonl");
  ilf_run->add_option("--queue-timeout", queue_timeout_s,
                      "Seconds to wait for each human feedback");
  ilf_run->add_flag("--insecure", insecure, "Serve the queue without a token");
  ilf_run->callback([&] {
    action = [&]() -> int {
      const RunConfig config = BuildConfig(common);
      Require(!contexts_in.empty() || !removal_tasks_in.empty(),
              "ilf-run needs --samples or --tasks");
      IlfEnvironment env;
      env.run_dir = common.run_dir;
      env.templates = Templates(config);
      env.root = MakePolicy(config.backend);
      if (config.refinement_backend) env.refiner = MakePolicy(*config.refinement_backend);
      env.scorer = BuildScorer(config, env.templates,
                               env.refiner ? env.refiner : env.root);
      env.finetune = MakeFinetuneBackend(config.finetune_backend);

      std::vector<Sample> contexts;
      std::vector<RemovalTask> removal_tasks;
      if (!removal_tasks_in.empty()) {
        env.format = TaskFormat::kWordRemoval;
        removal_tasks = ReadTasks(removal_tasks_in, in);
        for (const RemovalTask& task : removal_tasks) {
          contexts.push_back(RemovalSample(task));
        }
        if (feedback_kind.empty()) feedback_kind = "oracle_word_removal";
      } else {
        contexts = ReadSamples(contexts_in, in);
        if (feedback_kind.empty()) feedback_kind = "file";
      }

      std::shared_ptr<AnnotationQueue> queue;
      BackgroundServer background;
      if (feedback_kind == "file") {
        env.feedback = std::make_shared<FileFeedbackProvider>(contexts);
      } else if (feedback_kind == "oracle_word_removal") {
        Require(!removal_tasks.empty(), "oracle feedback needs --tasks");
        env.feedback = std::make_shared<OracleWordRemovalProvider>(removal_tasks);
      } else if (feedback_kind == "annotation_queue") {
        queue = std::make_shared<AnnotationQueue>(QueueOptions(config, common.run_dir));
        if (std::filesystem::exists(std::filesystem::path(common.run_dir) /
                                    "samples.jsonl")) {
          queue = AnnotationQueue::FromRunDir(QueueOptions(config, common.run_dir));
        }
        background.server =
            std::make_unique<AnnotationServer>(queue, ServeToken(config, insecure));
        if (!background.server->Bind("0.0.0.0", config.serve.port)) {
          Fail(ErrorKind::kIo, "cannot bind port " + std::to_string(config.serve.port));
        }
        background.listener = std::jthread(
            [server = background.server.get()] { server->ListenAfterBind(); });
        err << "annotation queue listening on port " << config.serve.port << "\n";
        env.feedback = std::make_shared<QueueFeedbackProvider>(
            queue, std::chrono::milliseconds(
                       static_cast<int64_t>(queue_timeout_s * 1000.0)));
      } else {
        Fail(ErrorKind::kValidation, "unknown feedback provider '" + feedback_kind + "'");
      }

      std::vector<RemovalTask> eval_tasks;
      if (!eval_tasks_in.empty()) {
        eval_tasks = LoadTasks(eval_tasks_in);
        const auto before = EvaluateExactMatch(
            PolicyPredictions(*env.root, eval_tasks, config), eval_tasks);
        out << "held-out before: "
            << FormatPercent(before.overall.accuracy, before.overall.se) << "\n";
      }

      const auto partitions = Partition(contexts, config.iterations);
      const IterationState state = RunIlf(config, partitions, env, resume);

      for (const IterationMetrics& m : state.metrics) {
        out << "iteration " << m.iteration << ": " << m.contexts << " contexts, "
            << m.records << " records, mean selected score "
            << Fixed(m.mean_selected_score, 4) << ", model " << m.model_id << " ("
            << m.provenance << ")\n";
      }
      if (!eval_tasks.empty()) {
        const auto after = EvaluateExactMatch(
            PolicyPredictions(*state.policy, eval_tasks, config), eval_tasks);
        out << "held-out after: "
            << FormatPercent(after.overall.accuracy, after.overall.se) << "\n";
      }
      return kExitOk;
    };
  });

  // rank-eval -------------------------------------------------------------
  auto* rank_eval = app.add_subcommand("rank-eval", "Mean fractional rank per method");
  std::string rankings_in = "-";
  rank_eval->add_option("rankings", rankings_in, "rankings.jsonl, - for stdin");
  rank_eval->callback([&] {
    action = [&] {
      const auto sheets = ReadRankings(rankings_in, in);
      for (const MethodRank& rank : MeanRanks(sheets)) {
        out << rank.method << "  " << Fixed(rank.mean_rank, 2) << " \xC2\xB1 "
            << Fixed(rank.se, 2) << " (n=" << rank.n << ")\n";
      }
      return kExitOk;
    };
  });

  // winrate ---------------------------------------------------------------
  auto* winrate = app.add_subcommand("winrate", "Win rate of one method over another");
  std::string method_a;
  std::string method_b;
  winrate->add_option("--a", method_a, "Method whose wins are counted")->required();
  winrate->add_option("--b", method_b, "Opponent method")->required();
  winrate->add_option("rankings", rankings_in, "rankings.jsonl, - for stdin");
  winrate->callback([&] {
    action = [&] {
      const auto sheets = ReadRankings(rankings_in, in);
      const Proportion rate = WinRate(sheets, method_a, method_b);
      out << FormatPercent(rate.p, rate.se) << " (n=" << rate.n << ")\n";
      return kExitOk;
    };
  });

  // kl --------------------------------------------------------------------
  auto* kl = app.add_subcommand("kl", "Monte-Carlo KL(p || q) in nats");
  std::string p_spec;
  std::string q_spec;
  KlOptions kl_options;
  kl->add_option("--p", p_spec, "Backend JSON for p, or a backend kind")->required();
  kl->add_option("--q", q_spec, "Backend JSON for q, or a backend kind")->required();
  kl->add_option("--samples", kl_options.n_samples, "Number of sampled texts");
  kl->add_option("--length", kl_options.sample_len, "Tokens per sampled text");
  kl->add_option("--repeats", kl_options.repeats, "Independent repetitions");
  AddSeedFlag(kl, common);
  kl->callback([&] {
    action = [&] {
      kl_options.seed = common.seed.value_or(0);
      const PolicyHandle p = MakePolicy(BackendFromFlag(p_spec, BackendSpec{}));
      const PolicyHandle q = MakePolicy(BackendFromFlag(q_spec, BackendSpec{}));
      const KlEstimate estimate = EstimateKl(*p, *q, kl_options);
      out << Fixed(estimate.kl_nats, 4) << " \xC2\xB1 " << Fixed(estimate.sem, 4)
          << " nats\n";
      return kExitOk;
    };
  });

  // bon-kl ----------------------------------------------------------------
  auto* bon_kl = app.add_subcommand("bon-kl", "KL of best-of-n sampling, in nats");
  int bon_n = 0;
  bon_kl->add_option("--n", bon_n, "Number of samples n")->required();
  bon_kl->callback([&] {
    action = [&] {
      out << Fixed(AnalyticBonKl(bon_n), 4) << "\n";
      return kExitOk;
    };
  });

  // rm-eval ---------------------------------------------------------------
  auto* rm_eval = app.add_subcommand("rm-eval", "Reward-model accuracy on comparisons");
  std::string pairs_in;
  std::string protocol = "binary";
  rm_eval->add_option("--pairs", pairs_in, "samples.jsonl with comparisons")->required();
  rm_eval->add_option("--protocol", protocol, "binary or comparison");
  AddConfigFlag(rm_eval, common);
  AddBackendFlag(rm_eval, common);
  rm_eval->callback([&] {
    action = [&] {
      const RunConfig config = BuildConfig(common);
      const auto pairs = ReadSamples(pairs_in, in);
      const RmAccuracy accuracy =
          EvaluateRmAccuracy(*MakePolicy(config.backend), pairs,
                             ParseRmProtocol(protocol), *Templates(config),
                             config.max_parallel);
      out << "accuracy " << FormatPercent(accuracy.accuracy, accuracy.se)
          << " (n=" << accuracy.n << ")\n";
      return kExitOk;
    };
  });

  // nll -------------------------------------------------------------------
  auto* nll = app.add_subcommand("nll", "Per-token negative log-likelihood of a dataset");
  std::string dataset_in;
  nll->add_option("--dataset", dataset_in, "finetune.jsonl")->required();
  AddConfigFlag(nll, common);
  AddBackendFlag(nll, common);
  nll->callback([&] {
    action = [&] {
      const RunConfig config = BuildConfig(common);
      const auto dataset = LoadFinetuneDataset(dataset_in);
      const MeanWithSe value = DatasetNll(*MakePolicy(config.backend), dataset);
      out << Fixed(value.mean, 4) << " \xC2\xB1 " << Fixed(value.se, 4)
          << " nats/token (n=" << value.n << ")\n";
      return kExitOk;
    };
  });

  // serve -----------------------------------------------------------------
  auto* serve = app.add_subcommand("serve", "Serve the annotation queue of a run");
  std::string host = "0.0.0.0";
  int port = 0;
  AddConfigFlag(serve, common);
  serve->add_option("--run-dir", common.run_dir, "Run directory")->required();
  serve->add_option("--host", host, "Address to bind");
  serve->add_option("--port", port, "Port; defaults to serve.port");
  serve->add_flag("--insecure", insecure, "Serve without a token");
  serve->callback([&] {
    action = [&] {
      const RunConfig config = BuildConfig(common);
      auto queue = AnnotationQueue::FromRunDir(QueueOptions(config, common.run_dir));
      const int bind_port = port > 0 ? port : config.serve.port;
      SignalWaiter signals;
      AnnotationServer server(queue, ServeToken(config, insecure));
      if (!server.Bind(host, bind_port)) {
        Fail(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(bind_port));
      }
      err << "serving " << queue->open_count() << " open tasks on " << host << ":"
          << bind_port << "\n";
      std::jthread listener([&server] { server.ListenAfterBind(); });
      signals.Wait();
      server.Stop();
      return kExitOk;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  }

  try {
    return action ? action() : kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace ilf
