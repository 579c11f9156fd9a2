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

#ifndef ILF_EVAL_H_
#define ILF_EVAL_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ilf/backend.h"
#include "ilf/core.h"
#include "ilf/templates.h"

namespace ilf {

// Per-item ranks of several methods, standard competition ranking (1224).
struct RankingSheet {
  std::string item_id;
  std::vector<std::string> method_names;
  std::vector<int> ranks;

  void Validate() const;
  int IndexOf(const std::string& method) const;
};

Json ToJson(const RankingSheet& sheet);
RankingSheet RankingSheetFromJson(const Json& json);
std::vector<RankingSheet> LoadRankings(const std::filesystem::path& path);
std::vector<RankingSheet> LoadRankings(std::istream& in);

// Each rank equals 1 + the number of strictly better entries.
bool IsCompetitionRanking(std::span<const int> ranks);

// Tie group of size n at rank r -> (r + (r + n - 1)) / 2.
std::vector<double> FractionalRanks(std::span<const int> ranks);

struct Proportion {
  double p = 0.0;
  double se = 0.0;
  size_t n = 0;
};

// sqrt(p (1 - p) / n).
double BinomialSe(double p, size_t n);

// Fraction of sheets where a outranks b, ties counting one half.
Proportion WinRate(std::span<const RankingSheet> sheets,
                   const std::string& method_a, const std::string& method_b);

// Mean fractional rank per method over all sheets, with standard error.
struct MethodRank {
  std::string method;
  double mean_rank = 0.0;
  double se = 0.0;
  size_t n = 0;
};
std::vector<MethodRank> MeanRanks(std::span<const RankingSheet> sheets);

struct MeanWithSe {
  double mean = 0.0;
  double se = 0.0;
  size_t n = 0;
};

MeanWithSe MeanAndSem(std::span<const double> values);

// Mean of -log p(completion | prompt) / token_count over records.
MeanWithSe DatasetNll(const Policy& policy,
                      std::span<const FinetuneRecord> dataset);

struct KlOptions {
  int n_samples = 2000;
  int sample_len = 64;
  uint64_t seed = 0;
  // Independent repetitions; with more than one, sem is the standard error
  // across repetition means.
  int repeats = 1;
};

struct KlEstimate {
  double kl_nats = 0.0;
  double sem = 0.0;
};

// Monte-Carlo KL(p || q): mean of log p(x) - log q(x) over unconditional
// draws x ~ p, each side conditioned on its own begin-of-sequence cue.
KlEstimate EstimateKl(const Policy& p, const Policy& q,
                      const KlOptions& options = {});

// log n - (n - 1) / n, the KL of best-of-n sampling from its base policy.
double AnalyticBonKl(int n);

enum class RmProtocol { kBinary, kComparison };

RmProtocol ParseRmProtocol(std::string_view name);

struct RmAccuracy {
  double accuracy = 0.0;
  double se = 0.0;
  size_t n = 0;
  std::vector<Preferred> predictions;
};

// Predicts the preferred summary of each comparison sample. Equal scores
// predict A.
RmAccuracy EvaluateRmAccuracy(const Policy& policy,
                              std::span<const Sample> pairs,
                              RmProtocol protocol,
                              const TemplateSet& templates = TemplateSet(),
                              int max_parallel = 4);

LabelProbe BinaryRmProbe(const TemplateSet& templates, const Sample& sample,
                         std::string_view summary);
LabelProbe ComparisonRmProbe(const TemplateSet& templates, const Sample& sample);

// "38.5 ± 1.3" from fractions.
std::string FormatPercent(double value, double se);

}  // namespace ilf

#endif  // ILF_EVAL_H_
