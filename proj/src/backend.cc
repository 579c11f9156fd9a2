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

#include "ilf/backend.h"

#include <algorithm>

#include "ilf/error.h"
#include "ilf/text.h"

namespace ilf {

std::string_view ToString(BackendKind kind) {
  switch (kind) {
    case BackendKind::kRuleMock: return "rule_mock";
    case BackendKind::kScripted: return "scripted";
    case BackendKind::kHttp: return "http";
    case BackendKind::kImitation: return "imitation";
    case BackendKind::kCategorical: return "categorical";
  }
  return "unknown";
}

double Policy::SequenceLogprob(std::string_view, std::string_view) const {
  Fail(ErrorKind::kCapability, std::string(ToString(kind())) + " backend '" +
                                   model_id() +
                                   "' does not support log-probabilities");
}

std::vector<double> Policy::SequenceLogprobs(
    std::span<const std::pair<std::string, std::string>> queries) const {
  std::vector<double> out;
  out.reserve(queries.size());
  for (const auto& [prefix, continuation] : queries) {
    out.push_back(SequenceLogprob(prefix, continuation));
  }
  return out;
}

size_t Policy::CountTokens(std::string_view text) const {
  return ilf::CountTokens(text);
}

std::shared_ptr<const Policy> Policy::Adapted(
    std::span<const FinetuneRecord>) const {
  return shared_from_this();
}

void LabelProbe::Validate() const {
  if (good_label.empty() || bad_label.empty()) {
    Fail(ErrorKind::kPrecondition, "label probe labels must be non-empty");
  }
  if (good_label == bad_label) {
    Fail(ErrorKind::kPrecondition, "label probe labels must differ");
  }
}

std::vector<std::string> Generate(const Policy& policy, std::string_view prompt,
                                  const SamplingParams& params, int n) {
  Require(n >= 1, "generate needs n >= 1, got " + std::to_string(n));
  Require(params.max_tokens >= 1, "generate needs max_tokens >= 1");
  std::vector<std::string> out = policy.Generate(prompt, params, n);
  if (out.size() != static_cast<size_t>(n)) {
    Fail(ErrorKind::kBackend, "backend returned " + std::to_string(out.size()) +
                                  " completions, expected " +
                                  std::to_string(n));
  }
  return out;
}

double NormalizedLabelProbability(double logp_good, double logp_bad) {
  if (std::isnan(logp_good) || std::isnan(logp_bad)) {
    Fail(ErrorKind::kDegenerateProbe, "label log-probability is NaN");
  }
  if (logp_good == kLogZero && logp_bad == kLogZero) {
    Fail(ErrorKind::kDegenerateProbe,
         "both label probabilities are zero or unavailable");
  }
  if (logp_good == kLogZero) return 0.0;
  if (logp_bad == kLogZero) return 1.0;
  // p_g / (p_g + p_b) = 1 / (1 + exp(lb - lg)), evaluated without overflow.
  const double d = logp_bad - logp_good;
  if (d > 0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

double LabelProbability(const Policy& policy, const LabelProbe& probe) {
  probe.Validate();
  const std::pair<std::string, std::string> queries[] = {
      {probe.prompt, probe.good_label}, {probe.prompt, probe.bad_label}};
  const std::vector<double> logps = policy.SequenceLogprobs(queries);
  return NormalizedLabelProbability(logps[0], logps[1]);
}

double SequenceLogprob(const Policy& policy, std::string_view prefix,
                       std::string_view continuation) {
  Require(!continuation.empty(), "sequence_logprob needs a non-empty continuation");
  const double logp = policy.SequenceLogprob(prefix, continuation);
  if (logp > 0.0) {
    Fail(ErrorKind::kBackend, "backend returned a positive log-probability");
  }
  return logp;
}

}  // namespace ilf
