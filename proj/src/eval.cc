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

#include "ilf/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "ilf/error.h"
#include "ilf/parallel.h"
#include "ilf/text.h"

namespace ilf {

bool IsCompetitionRanking(std::span<const int> ranks) {
  for (int r : ranks) {
    const auto better = std::count_if(ranks.begin(), ranks.end(),
                                      [r](int other) { return other < r; });
    if (r != 1 + better) return false;
  }
  return true;
}

std::vector<double> FractionalRanks(std::span<const int> ranks) {
  if (!IsCompetitionRanking(ranks)) {
    Fail(ErrorKind::kValidation, "not a standard competition ranking");
  }
  std::vector<double> out;
  out.reserve(ranks.size());
  for (int r : ranks) {
    const auto n = std::count(ranks.begin(), ranks.end(), r);
    out.push_back((r + (r + static_cast<double>(n) - 1.0)) / 2.0);
  }
  return out;
}

void RankingSheet::Validate() const {
  if (method_names.size() != ranks.size()) {
    Fail(ErrorKind::kValidation,
         "ranking sheet '" + item_id + "': methods and ranks differ in length");
  }
  if (!IsCompetitionRanking(ranks)) {
    Fail(ErrorKind::kValidation, "ranking sheet '" + item_id +
                                     "': not a standard competition ranking");
  }
}

int RankingSheet::IndexOf(const std::string& method) const {
  auto it = std::find(method_names.begin(), method_names.end(), method);
  if (it == method_names.end()) {
    Fail(ErrorKind::kLookup,
         "method '" + method + "' absent from ranking sheet '" + item_id + "'");
  }
  return static_cast<int>(it - method_names.begin());
}

Json ToJson(const RankingSheet& sheet) {
  Json json;
  json["item_id"] = sheet.item_id;
  json["method_names"] = sheet.method_names;
  json["ranks"] = sheet.ranks;
  return json;
}

RankingSheet RankingSheetFromJson(const Json& json) {
  RankingSheet sheet;
  sheet.item_id = json.at("item_id").get<std::string>();
  sheet.method_names = json.at("method_names").get<std::vector<std::string>>();
  sheet.ranks = json.at("ranks").get<std::vector<int>>();
  sheet.Validate();
  return sheet;
}

std::vector<RankingSheet> LoadRankings(std::istream& in) {
  std::vector<RankingSheet> sheets;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (Trim(line).empty()) continue;
    try {
      sheets.push_back(RankingSheetFromJson(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError(line_number, e.what());
    } catch (const Error& e) {
      throw ParseError(line_number, e.what());
    }
  }
  return sheets;
}

std::vector<RankingSheet> LoadRankings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  return LoadRankings(in);
}

double BinomialSe(double p, size_t n) {
  Require(n > 0, "standard error needs n > 0");
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

Proportion WinRate(std::span<const RankingSheet> sheets,
                   const std::string& method_a, const std::string& method_b) {
  Require(!sheets.empty(), "win rate needs at least one ranking sheet");
  double wins = 0.0;
  for (const RankingSheet& sheet : sheets) {
    const int a = sheet.IndexOf(method_a);
    const int b = sheet.IndexOf(method_b);
    const std::vector<double> fractional = FractionalRanks(sheet.ranks);
    if (fractional[a] < fractional[b]) {
      wins += 1.0;
    } else if (fractional[a] == fractional[b]) {
      wins += 0.5;
    }
  }
  Proportion out;
  out.n = sheets.size();
  out.p = wins / static_cast<double>(out.n);
  out.se = BinomialSe(out.p, out.n);
  return out;
}

MeanWithSe MeanAndSem(std::span<const double> values) {
  Require(!values.empty(), "mean needs at least one value");
  MeanWithSe out;
  out.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(out.n);
  if (out.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double variance = ss / static_cast<double>(out.n - 1);
    out.se = std::sqrt(variance / static_cast<double>(out.n));
  }
  return out;
}

std::vector<MethodRank> MeanRanks(std::span<const RankingSheet> sheets) {
  std::map<std::string, std::vector<double>> by_method;
  std::vector<std::string> order;
  for (const RankingSheet& sheet : sheets) {
    const std::vector<double> fractional = FractionalRanks(sheet.ranks);
    for (size_t i = 0; i < sheet.method_names.size(); ++i) {
      auto [it, inserted] = by_method.try_emplace(sheet.method_names[i]);
      if (inserted) order.push_back(sheet.method_names[i]);
      it->second.push_back(fractional[i]);
    }
  }
  std::vector<MethodRank> out;
  for (const std::string& method : order) {
    const MeanWithSe stats = MeanAndSem(by_method[method]);
    out.push_back({method, stats.mean, stats.se, stats.n});
  }
  return out;
}

MeanWithSe DatasetNll(const Policy& policy,
                      std::span<const FinetuneRecord> dataset) {
  Require(!dataset.empty(), "dataset_nll needs at least one record");
  std::vector<std::pair<std::string, std::string>> queries;
  queries.reserve(dataset.size());
  for (const FinetuneRecord& record : dataset) {
    Require(!record.completion.empty(), "dataset_nll needs non-empty completions");
    queries.emplace_back(record.prompt, record.completion);
  }
  const std::vector<double> logps = policy.SequenceLogprobs(queries);
  std::vector<double> per_token;
  per_token.reserve(dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i) {
    const size_t tokens =
        std::max<size_t>(1, policy.CountTokens(dataset[i].completion));
    per_token.push_back(-logps[i] / static_cast<double>(tokens));
  }
  return MeanAndSem(per_token);
}

KlEstimate EstimateKl(const Policy& p, const Policy& q,
                      const KlOptions& options) {
  Require(options.n_samples >= 1, "estimate_kl needs n_samples >= 1");
  Require(options.sample_len >= 1, "estimate_kl needs sample_len >= 1");
  Require(options.repeats >= 1, "estimate_kl needs repeats >= 1");
  std::vector<double> run_means;
  double single_run_sem = 0.0;
  for (int rep = 0; rep < options.repeats; ++rep) {
    SamplingParams params;
    params.max_tokens = options.sample_len;
    params.seed = MixSeed(options.seed, "kl-run-" + std::to_string(rep));
    const std::string cue_p(p.BosCue());
    const std::string cue_q(q.BosCue());
    const std::vector<std::string> draws =
        Generate(p, cue_p, params, options.n_samples);
    std::vector<std::pair<std::string, std::string>> on_p, on_q;
    for (const std::string& x : draws) {
      on_p.emplace_back(cue_p, x);
      on_q.emplace_back(cue_q, x);
    }
    const std::vector<double> logp = p.SequenceLogprobs(on_p);
    const std::vector<double> logq = q.SequenceLogprobs(on_q);
    std::vector<double> diffs(draws.size());
    for (size_t i = 0; i < draws.size(); ++i) diffs[i] = logp[i] - logq[i];
    const MeanWithSe stats = MeanAndSem(diffs);
    run_means.push_back(stats.mean);
    single_run_sem = stats.se;
  }
  KlEstimate estimate;
  if (options.repeats == 1) {
    estimate.kl_nats = run_means[0];
    estimate.sem = single_run_sem;
  } else {
    const MeanWithSe across = MeanAndSem(run_means);
    estimate.kl_nats = across.mean;
    estimate.sem = across.se;
  }
  return estimate;
}

double AnalyticBonKl(int n) {
  Require(n >= 1, "best-of-n KL needs n >= 1");
  const double nn = static_cast<double>(n);
  return std::log(nn) - (nn - 1.0) / nn;
}

RmProtocol ParseRmProtocol(std::string_view name) {
  if (name == "binary") return RmProtocol::kBinary;
  if (name == "comparison") return RmProtocol::kComparison;
  Fail(ErrorKind::kValidation, "unknown RM protocol '" + std::string(name) + "'");
}

LabelProbe BinaryRmProbe(const TemplateSet& templates, const Sample& sample,
                         std::string_view summary) {
  LabelProbe probe;
  probe.prompt = RenderPrompt(templates.Get(TemplateId::kBinaryRm), sample,
                              {{"summary", std::string(summary)}});
  probe.good_label = " Yes";
  probe.bad_label = " No";
  return probe;
}

LabelProbe ComparisonRmProbe(const TemplateSet& templates,
                             const Sample& sample) {
  LabelProbe probe;
  probe.prompt = RenderPrompt(templates.Get(TemplateId::kComparisonRm), sample,
                              {{"summary_a", sample.comparison->output_a},
                               {"summary_b", sample.comparison->output_b}});
  probe.good_label = " A";
  probe.bad_label = " B";
  return probe;
}

RmAccuracy EvaluateRmAccuracy(const Policy& policy,
                              std::span<const Sample> pairs,
                              RmProtocol protocol, const TemplateSet& templates,
                              int max_parallel) {
  Require(!pairs.empty(), "rm_accuracy needs at least one comparison");
  for (const Sample& sample : pairs) {
    if (!sample.comparison) {
      Fail(ErrorKind::kValidation,
           "sample '" + sample.id + "' has no comparison fields");
    }
  }
  RmAccuracy out;
  out.predictions = ParallelMap(pairs.size(), max_parallel, [&](size_t i) {
    const Sample& sample = pairs[i];
    if (protocol == RmProtocol::kBinary) {
      const double a = LabelProbability(
          policy, BinaryRmProbe(templates, sample, sample.comparison->output_a));
      const double b = LabelProbability(
          policy, BinaryRmProbe(templates, sample, sample.comparison->output_b));
      return a >= b ? Preferred::kA : Preferred::kB;
    }
    const double a = LabelProbability(policy, ComparisonRmProbe(templates, sample));
    return a >= 0.5 ? Preferred::kA : Preferred::kB;
  });
  size_t correct = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    correct += out.predictions[i] == pairs[i].comparison->preferred;
  }
  out.n = pairs.size();
  out.accuracy = static_cast<double>(correct) / static_cast<double>(out.n);
  out.se = BinomialSe(out.accuracy, out.n);
  return out;
}

std::string FormatPercent(double value, double se) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.1f \xC2\xB1 %.1f", value * 100.0,
                se * 100.0);
  return buffer;
}

}  // namespace ilf
