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

#ifndef ILF_WORDREMOVAL_H_
#define ILF_WORDREMOVAL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ilf/core.h"

namespace ilf {

// One targeted word-removal instance: delete `remove_words` from `sentence`.
struct RemovalTask {
  std::string id;
  std::string sentence;
  int k = 0;
  std::vector<std::string> remove_words;
  // Completion expected after `stem`, e.g. " such a nice person.".
  std::string target;
  std::string stem;

  void Validate() const;

  friend bool operator==(const RemovalTask&, const RemovalTask&) = default;
};

Json ToJson(const RemovalTask& task);
RemovalTask RemovalTaskFromJson(const Json& json);
std::vector<RemovalTask> LoadTasks(const std::filesystem::path& path);
std::vector<RemovalTask> LoadTasks(std::istream& in);
void WriteTasks(std::span<const RemovalTask> tasks,
                const std::filesystem::path& path);

// "badword01" .. "badword25".
std::vector<std::string> DefaultWordList();
std::vector<std::string> LoadWordList(const std::filesystem::path& path);

// For each k in 1..10, `sentences_per_k` sentences with k distinct words
// drawn without replacement; for each l in {1,2,3} with l <= k one task per
// sentence. Deterministic in `seed`.
std::vector<RemovalTask> GenerateTaskSet(uint64_t seed,
                                         std::span<const std::string> word_list,
                                         int sentences_per_k = 50);

// Sentence grammar: "You are such a w1, and a w2, ..., and a nice person."
struct RemovalSentence {
  std::string stem;                 // first two whitespace-delimited words
  std::vector<std::string> items;   // "a jerk", "a nice person", "an idiot"
};

std::string Article(std::string_view noun);
std::string BuildSentence(std::span<const std::string> nouns);
RemovalSentence ParseSentence(std::string_view sentence);
std::string ItemNoun(std::string_view item);

// Target completion with `remove_words` dropped and the remaining items
// joined by " and ".
std::string RemovalTarget(std::string_view sentence,
                          std::span<const std::string> remove_words);

// "The ideal text should remove the word X, but otherwise be unchanged".
std::string RemovalInstruction(std::span<const std::string> remove_words);

// The full model prompt, ending with the stem.
std::string BuildRemovalPrompt(const RemovalTask& task);

// Task projected onto a Sample: post = sentence, feedback = instruction.
Sample RemovalSample(const RemovalTask& task);

// Inverse of BuildRemovalPrompt; nullopt when `prompt` is not one.
struct ParsedRemovalPrompt {
  std::string sentence;
  std::vector<std::string> remove_words;
  std::string stem;
};
std::optional<ParsedRemovalPrompt> ParseRemovalPrompt(std::string_view prompt);

struct MatchStats {
  double accuracy = 0.0;
  double se = 0.0;
  size_t n = 0;
};

struct ExactMatchReport {
  MatchStats overall;
  std::map<int, MatchStats> per_l;
  std::vector<bool> matches;
};

MatchStats ProportionStats(size_t successes, size_t n);

// Trim-then-byte-compare exact match against each task's target.
ExactMatchReport EvaluateExactMatch(std::span<const std::string> predictions,
                                    std::span<const RemovalTask> tasks);

// Returns a copy of `predictions` with round((1 - success_rate) * n) entries,
// chosen by a seeded shuffle, altered so they no longer match.
std::vector<std::string> CorruptPredictions(
    std::span<const std::string> predictions, double success_rate,
    uint64_t seed);

}  // namespace ilf

#endif  // ILF_WORDREMOVAL_H_
