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

#ifndef ILF_MOCK_BACKENDS_H_
#define ILF_MOCK_BACKENDS_H_

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ilf/backend.h"

namespace ilf {

// Deterministic rule-based policy. On a word-removal prompt it answers with
// the oracle target; on other prompts it echoes the first sentence of the
// prompt's "Text:" block.
//
// With corruption > 0 a seeded fraction of removal words is "unknown": the
// mock leaves those words in place. Adapted() marks every word that a
// training demonstration removes as known.
class RuleMockPolicy : public Policy {
 public:
  explicit RuleMockPolicy(std::string model_id = "rule-mock",
                          double corruption = 0.0, uint64_t seed = 0,
                          std::set<std::string> learned = {});

  BackendKind kind() const override { return BackendKind::kRuleMock; }
  const std::string& model_id() const override { return model_id_; }
  std::vector<std::string> Generate(std::string_view prompt,
                                    const SamplingParams& params,
                                    int n) const override;
  std::shared_ptr<const Policy> Adapted(
      std::span<const FinetuneRecord> records) const override;

  std::string Respond(std::string_view prompt) const;
  bool Knows(const std::string& word) const;
  const std::set<std::string>& learned() const { return learned_; }

 private:
  std::string model_id_;
  double corruption_;
  uint64_t seed_;
  std::set<std::string> learned_;
};

// One replay record: completions for a prompt, with optional per-token
// log-probabilities parallel to `completions`.
struct Fixture {
  std::string prompt;
  std::vector<std::string> completions;
  std::vector<std::vector<double>> token_logprobs;
};

Json ToJson(const Fixture& fixture);
Fixture FixtureFromJson(const Json& json);

// Replays recorded completions and log-probabilities keyed by prompt.
class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::string model_id = "scripted");

  // Reads every *.jsonl file of `dir` in name order.
  static std::shared_ptr<ScriptedPolicy> LoadDir(
      const std::filesystem::path& dir, std::string model_id = "scripted");

  void Add(Fixture fixture);
  // Convenience for label probes: completions {good, bad} with single-token
  // log-probabilities.
  void AddLabelFixture(const std::string& prompt, const std::string& good,
                       double logp_good, const std::string& bad,
                       double logp_bad);

  BackendKind kind() const override { return BackendKind::kScripted; }
  const std::string& model_id() const override { return model_id_; }
  std::vector<std::string> Generate(std::string_view prompt,
                                    const SamplingParams& params,
                                    int n) const override;
  double SequenceLogprob(std::string_view prefix,
                         std::string_view continuation) const override;

  size_t size() const { return fixtures_.size(); }

 private:
  const Fixture& Find(std::string_view prompt) const;

  std::string model_id_;
  std::unordered_map<std::string, Fixture> fixtures_;  // by prompt hash
};

// Context-free distribution over whitespace-free tokens; a sequence is
// max_tokens i.i.d. draws joined by single spaces.
class CategoricalPolicy : public Policy {
 public:
  CategoricalPolicy(std::string model_id,
                    std::vector<std::pair<std::string, double>> tokens);

  BackendKind kind() const override { return BackendKind::kCategorical; }
  const std::string& model_id() const override { return model_id_; }
  std::vector<std::string> Generate(std::string_view prompt,
                                    const SamplingParams& params,
                                    int n) const override;
  double SequenceLogprob(std::string_view prefix,
                         std::string_view continuation) const override;
  size_t CountTokens(std::string_view text) const override;

  double Probability(const std::string& token) const;
  const std::vector<std::pair<std::string, double>>& tokens() const {
    return tokens_;
  }

 private:
  std::string model_id_;
  std::vector<std::pair<std::string, double>> tokens_;
  std::vector<double> cumulative_;
};

// Result of imitation finetuning: an exact prompt -> completion table with
// every other prompt delegated to `fallback`.
class ImitationPolicy : public Policy {
 public:
  ImitationPolicy(std::string model_id, std::span<const FinetuneRecord> records,
                  PolicyHandle fallback);

  BackendKind kind() const override { return BackendKind::kImitation; }
  const std::string& model_id() const override { return model_id_; }
  std::vector<std::string> Generate(std::string_view prompt,
                                    const SamplingParams& params,
                                    int n) const override;
  double SequenceLogprob(std::string_view prefix,
                         std::string_view continuation) const override;
  size_t CountTokens(std::string_view text) const override {
    return fallback_->CountTokens(text);
  }
  std::string_view BosCue() const override { return fallback_->BosCue(); }
  std::shared_ptr<const Policy> Adapted(
      std::span<const FinetuneRecord> records) const override;

  size_t table_size() const { return table_.size(); }
  const PolicyHandle& fallback() const { return fallback_; }

 private:
  ImitationPolicy(std::string model_id,
                  std::map<std::string, std::string, std::less<>> table,
                  PolicyHandle fallback);

  std::string model_id_;
  std::map<std::string, std::string, std::less<>> table_;
  PolicyHandle fallback_;
};

}  // namespace ilf

#endif  // ILF_MOCK_BACKENDS_H_
