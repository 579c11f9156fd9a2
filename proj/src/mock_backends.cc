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

#include "ilf/mock_backends.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ilf/error.h"
#include "ilf/text.h"
#include "ilf/wordremoval.h"

namespace ilf {

namespace {

double UnitInterval(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

// ---------------------------------------------------------------------------
// RuleMockPolicy

RuleMockPolicy::RuleMockPolicy(std::string model_id, double corruption,
                               uint64_t seed, std::set<std::string> learned)
    : model_id_(std::move(model_id)),
      corruption_(corruption),
      seed_(seed),
      learned_(std::move(learned)) {
  Require(corruption_ >= 0.0 && corruption_ <= 1.0,
          "rule mock corruption must be in [0, 1]");
}

bool RuleMockPolicy::Knows(const std::string& word) const {
  if (corruption_ <= 0.0 || learned_.contains(word)) return true;
  return UnitInterval(MixSeed(seed_, "unknown-word:" + word)) >= corruption_;
}

std::string RuleMockPolicy::Respond(std::string_view prompt) const {
  if (auto parsed = ParseRemovalPrompt(prompt)) {
    std::vector<std::string> removable;
    for (const std::string& word : parsed->remove_words) {
      if (Knows(word)) removable.push_back(word);
    }
    try {
      return RemovalTarget(parsed->sentence, removable);
    } catch (const Error&) {
      // Not our sentence grammar; fall through to the echo rule.
    }
  }
  std::string_view text = prompt;
  if (const size_t pos = prompt.rfind("Text: "); pos != std::string_view::npos) {
    text = prompt.substr(pos + 6);
    text = text.substr(0, text.find('\n'));
  }
  text = Trim(text);
  const size_t end = text.find_first_of(".!?");
  if (end != std::string_view::npos) text = text.substr(0, end + 1);
  return " " + std::string(text);
}

std::vector<std::string> RuleMockPolicy::Generate(std::string_view prompt,
                                                  const SamplingParams&,
                                                  int n) const {
  return std::vector<std::string>(static_cast<size_t>(std::max(n, 0)),
                                  Respond(prompt));
}

std::shared_ptr<const Policy> RuleMockPolicy::Adapted(
    std::span<const FinetuneRecord> records) const {
  std::set<std::string> learned = learned_;
  for (const FinetuneRecord& record : records) {
    auto parsed = ParseRemovalPrompt(record.prompt);
    if (!parsed) continue;
    try {
      if (Trim(RemovalTarget(parsed->sentence, parsed->remove_words)) ==
          Trim(record.completion)) {
        learned.insert(parsed->remove_words.begin(), parsed->remove_words.end());
      }
    } catch (const Error&) {
    }
  }
  return std::make_shared<RuleMockPolicy>(model_id_, corruption_, seed_,
                                          std::move(learned));
}

// ---------------------------------------------------------------------------
// ScriptedPolicy

Json ToJson(const Fixture& fixture) {
  Json json;
  json["prompt_hash"] = HexDigest(fixture.prompt);
  json["prompt"] = fixture.prompt;
  json["completions"] = fixture.completions;
  json["token_logprobs"] = fixture.token_logprobs;
  return json;
}

Fixture FixtureFromJson(const Json& json) {
  Fixture fixture;
  fixture.prompt = json.at("prompt").get<std::string>();
  fixture.completions = json.at("completions").get<std::vector<std::string>>();
  if (auto it = json.find("token_logprobs"); it != json.end()) {
    fixture.token_logprobs = it->get<std::vector<std::vector<double>>>();
  }
  if (auto it = json.find("prompt_hash"); it != json.end()) {
    if (it->get<std::string>() != HexDigest(fixture.prompt)) {
      Fail(ErrorKind::kValidation, "fixture prompt_hash does not match prompt");
    }
  }
  if (fixture.completions.empty()) {
    Fail(ErrorKind::kValidation, "fixture needs at least one completion");
  }
  if (!fixture.token_logprobs.empty() &&
      fixture.token_logprobs.size() != fixture.completions.size()) {
    Fail(ErrorKind::kValidation,
         "fixture token_logprobs must parallel completions");
  }
  return fixture;
}

ScriptedPolicy::ScriptedPolicy(std::string model_id)
    : model_id_(std::move(model_id)) {}

std::shared_ptr<ScriptedPolicy> ScriptedPolicy::LoadDir(
    const std::filesystem::path& dir, std::string model_id) {
  if (!std::filesystem::is_directory(dir)) {
    Fail(ErrorKind::kIo, "fixtures_dir " + dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  auto policy = std::make_shared<ScriptedPolicy>(std::move(model_id));
  for (const auto& file : files) {
    size_t line = 0;
    for (const Json& row : ReadJsonLines(file)) {
      ++line;
      try {
        policy->Add(FixtureFromJson(row));
      } catch (const std::exception& e) {
        Fail(ErrorKind::kParse, file.string() + " record " +
                                    std::to_string(line) + ": " + e.what());
      }
    }
  }
  return policy;
}

void ScriptedPolicy::Add(Fixture fixture) {
  std::string key = HexDigest(fixture.prompt);
  fixtures_[std::move(key)] = std::move(fixture);
}

void ScriptedPolicy::AddLabelFixture(const std::string& prompt,
                                     const std::string& good, double logp_good,
                                     const std::string& bad, double logp_bad) {
  Fixture fixture;
  fixture.prompt = prompt;
  fixture.completions = {good, bad};
  fixture.token_logprobs = {{logp_good}, {logp_bad}};
  Add(std::move(fixture));
}

const Fixture& ScriptedPolicy::Find(std::string_view prompt) const {
  auto it = fixtures_.find(HexDigest(prompt));
  if (it == fixtures_.end() || it->second.prompt != prompt) {
    Fail(ErrorKind::kFixtureMiss,
         "no scripted fixture for prompt hash " + HexDigest(prompt));
  }
  return it->second;
}

std::vector<std::string> ScriptedPolicy::Generate(std::string_view prompt,
                                                  const SamplingParams&,
                                                  int n) const {
  const Fixture& fixture = Find(prompt);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(fixture.completions[i % fixture.completions.size()]);
  }
  return out;
}

double ScriptedPolicy::SequenceLogprob(std::string_view prefix,
                                       std::string_view continuation) const {
  const Fixture& fixture = Find(prefix);
  if (fixture.token_logprobs.empty()) {
    Fail(ErrorKind::kCapability,
         "scripted fixture has no token_logprobs for prompt hash " +
             HexDigest(prefix));
  }
  for (size_t i = 0; i < fixture.completions.size(); ++i) {
    if (fixture.completions[i] == continuation) {
      double total = 0.0;
      for (double logp : fixture.token_logprobs[i]) total += logp;
      return total;
    }
  }
  return kLogZero;
}

// ---------------------------------------------------------------------------
// CategoricalPolicy

CategoricalPolicy::CategoricalPolicy(
    std::string model_id, std::vector<std::pair<std::string, double>> tokens)
    : model_id_(std::move(model_id)), tokens_(std::move(tokens)) {
  Require(!tokens_.empty(), "categorical policy needs at least one token");
  double total = 0.0;
  for (const auto& [token, p] : tokens_) {
    if (token.empty() || token.find_first_of(" \t\n\r") != std::string::npos) {
      Fail(ErrorKind::kValidation,
           "categorical tokens must be non-empty and whitespace-free");
    }
    if (!(p >= 0.0)) {
      Fail(ErrorKind::kValidation, "categorical probabilities must be >= 0");
    }
    total += p;
    cumulative_.push_back(total);
  }
  if (std::abs(total - 1.0) > 1e-9) {
    Fail(ErrorKind::kValidation, "categorical probabilities must sum to 1");
  }
}

double CategoricalPolicy::Probability(const std::string& token) const {
  for (const auto& [name, p] : tokens_) {
    if (name == token) return p;
  }
  return 0.0;
}

std::vector<std::string> CategoricalPolicy::Generate(
    std::string_view prompt, const SamplingParams& params, int n) const {
  std::vector<std::string> out;
  const uint64_t base = MixSeed(params.seed, StableHash(prompt));
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(MixSeed(base, static_cast<uint64_t>(i)));
    std::string text;
    for (int t = 0; t < params.max_tokens; ++t) {
      const double u = UnitInterval(rng()) * cumulative_.back();
      size_t index = static_cast<size_t>(
          std::upper_bound(cumulative_.begin(), cumulative_.end(), u) -
          cumulative_.begin());
      index = std::min(index, tokens_.size() - 1);
      if (t > 0) text += ' ';
      text += tokens_[index].first;
    }
    out.push_back(std::move(text));
  }
  return out;
}

double CategoricalPolicy::SequenceLogprob(std::string_view,
                                          std::string_view continuation) const {
  double total = 0.0;
  for (const std::string& token : SplitWhitespace(continuation)) {
    const double p = Probability(token);
    if (p <= 0.0) return kLogZero;
    total += std::log(p);
  }
  return total;
}

size_t CategoricalPolicy::CountTokens(std::string_view text) const {
  return SplitWhitespace(text).size();
}

// ---------------------------------------------------------------------------
// ImitationPolicy

ImitationPolicy::ImitationPolicy(std::string model_id,
                                 std::span<const FinetuneRecord> records,
                                 PolicyHandle fallback)
    : model_id_(std::move(model_id)), fallback_(std::move(fallback)) {
  Require(fallback_ != nullptr, "imitation policy needs a fallback policy");
  // Highest-weight completion per prompt; first one wins ties.
  std::map<std::string, double, std::less<>> best_weight;
  for (const FinetuneRecord& record : records) {
    auto it = best_weight.find(record.prompt);
    if (it == best_weight.end() || record.weight > it->second) {
      best_weight[record.prompt] = record.weight;
      table_[record.prompt] = record.completion;
    }
  }
}

ImitationPolicy::ImitationPolicy(
    std::string model_id, std::map<std::string, std::string, std::less<>> table,
    PolicyHandle fallback)
    : model_id_(std::move(model_id)),
      table_(std::move(table)),
      fallback_(std::move(fallback)) {}

std::vector<std::string> ImitationPolicy::Generate(std::string_view prompt,
                                                   const SamplingParams& params,
                                                   int n) const {
  if (auto it = table_.find(prompt); it != table_.end()) {
    return std::vector<std::string>(static_cast<size_t>(std::max(n, 0)),
                                    it->second);
  }
  return fallback_->Generate(prompt, params, n);
}

double ImitationPolicy::SequenceLogprob(std::string_view prefix,
                                        std::string_view continuation) const {
  if (auto it = table_.find(prefix); it != table_.end()) {
    return it->second == continuation ? 0.0 : kLogZero;
  }
  return fallback_->SequenceLogprob(prefix, continuation);
}

std::shared_ptr<const Policy> ImitationPolicy::Adapted(
    std::span<const FinetuneRecord> records) const {
  return std::shared_ptr<const Policy>(
      new ImitationPolicy(model_id_, table_, fallback_->Adapted(records)));
}

}  // namespace ilf
