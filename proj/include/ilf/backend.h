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

#ifndef ILF_BACKEND_H_
#define ILF_BACKEND_H_

#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ilf/core.h"

namespace ilf {

enum class BackendKind { kRuleMock, kScripted, kHttp, kImitation, kCategorical };

std::string_view ToString(BackendKind kind);

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// A generation policy. Implementations are immutable after construction and
// safe to call from several threads at once.
class Policy : public std::enable_shared_from_this<Policy> {
 public:
  virtual ~Policy() = default;

  virtual BackendKind kind() const = 0;
  virtual const std::string& model_id() const = 0;

  // Exactly `n` raw (not postprocessed) completions of `prompt`. Sample i is
  // a function of (params.seed, prompt, i) for the deterministic kinds, so a
  // larger n extends a smaller one.
  virtual std::vector<std::string> Generate(std::string_view prompt,
                                            const SamplingParams& params,
                                            int n) const = 0;

  // Sum of per-token log-probabilities (nats) of `continuation` after
  // `prefix`. kLogZero when the continuation is impossible.
  virtual double SequenceLogprob(std::string_view prefix,
                                 std::string_view continuation) const;

  // Batched form of SequenceLogprob; backends with request overhead
  // override it to fan out concurrently.
  virtual std::vector<double> SequenceLogprobs(
      std::span<const std::pair<std::string, std::string>> queries) const;

  // Token count used for the generation cap.
  virtual size_t CountTokens(std::string_view text) const;

  // Prompt used for unconditional sampling.
  virtual std::string_view BosCue() const { return {}; }

  // Policy after absorbing supervised demonstrations without an explicit
  // lookup table. Most kinds return themselves.
  virtual std::shared_ptr<const Policy> Adapted(
      std::span<const FinetuneRecord> records) const;
};

using PolicyHandle = std::shared_ptr<const Policy>;

struct LabelProbe {
  std::string prompt;
  std::string good_label = " Yes";
  std::string bad_label = " No";

  void Validate() const;
};

// Validated entry points shared by every backend.
std::vector<std::string> Generate(const Policy& policy, std::string_view prompt,
                                  const SamplingParams& params, int n);

// p(good) / (p(good) + p(bad)) from the label sequence log-probabilities.
double LabelProbability(const Policy& policy, const LabelProbe& probe);

// Normalisation step of LabelProbability, exposed for backends that
// already hold both log-probabilities.
double NormalizedLabelProbability(double logp_good, double logp_bad);

double SequenceLogprob(const Policy& policy, std::string_view prefix,
                       std::string_view continuation);

}  // namespace ilf

#endif  // ILF_BACKEND_H_
