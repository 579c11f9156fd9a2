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

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "ilf/error.h"
#include "ilf/text.h"
#include "ilf/wordremoval.h"

namespace ilf {
namespace {

TEST(GenerateTaskSetTest, DefaultSizeIs1350) {
  const auto tasks = GenerateTaskSet(0, DefaultWordList());
  EXPECT_EQ(tasks.size(), 1350u);  // 50 * (10 + 9 + 8)
  size_t per_l[4] = {0, 0, 0, 0};
  for (const RemovalTask& task : tasks) per_l[task.remove_words.size()]++;
  EXPECT_EQ(per_l[1], 500u);
  EXPECT_EQ(per_l[2], 450u);
  EXPECT_EQ(per_l[3], 400u);
}

TEST(GenerateTaskSetTest, OneSentencePerKGives27) {
  EXPECT_EQ(GenerateTaskSet(0, DefaultWordList(), 1).size(), 27u);
}

TEST(GenerateTaskSetTest, DeterministicInSeed) {
  const auto words = DefaultWordList();
  EXPECT_EQ(GenerateTaskSet(5, words, 3), GenerateTaskSet(5, words, 3));
  EXPECT_NE(GenerateTaskSet(5, words, 3), GenerateTaskSet(6, words, 3));
}

TEST(GenerateTaskSetTest, TaskInvariantsHold) {
  for (const RemovalTask& task : GenerateTaskSet(3, DefaultWordList())) {
    ASSERT_NO_THROW(task.Validate());
    EXPECT_LE(task.remove_words.size(), static_cast<size_t>(task.k));
    EXPECT_EQ(task.stem, "You are");
    EXPECT_NE(task.target.find("nice person"), std::string::npos);
    const auto target_tokens = TokenStrings(task.target);
    const std::set<std::string> tokens(target_tokens.begin(), target_tokens.end());
    for (const std::string& word : task.remove_words) {
      EXPECT_EQ(tokens.count(word), 0u) << task.id;
      size_t first = task.sentence.find(word);
      ASSERT_NE(first, std::string::npos);
      EXPECT_EQ(task.sentence.find(word, first + 1), std::string::npos);
    }
  }
}

TEST(GenerateTaskSetTest, RejectsBadWordLists) {
  auto words = DefaultWordList();
  words[1] = words[0];
  EXPECT_THROW(GenerateTaskSet(0, words), Error);
  EXPECT_THROW(GenerateTaskSet(0, std::vector<std::string>{"a", "b", "c"}), Error);
}

TEST(SentenceTest, BuildAndParse) {
  const std::vector<std::string> nouns = {"jerk", "idiot", "nice person"};
  const std::string sentence = BuildSentence(nouns);
  EXPECT_EQ(sentence, "You are such a jerk, and an idiot, and a nice person.");
  const RemovalSentence parsed = ParseSentence(sentence);
  EXPECT_EQ(parsed.stem, "You are");
  EXPECT_EQ(parsed.items,
            (std::vector<std::string>{"a jerk", "an idiot", "a nice person"}));
  EXPECT_EQ(ItemNoun("an idiot"), "idiot");
}

TEST(RemovalTargetTest, WorkedExample) {
  const std::string sentence = "You are such a jerk, and a nice person, and an idiot.";
  EXPECT_EQ(RemovalTarget(sentence, std::vector<std::string>{"jerk"}),
            " such a nice person and an idiot.");
  EXPECT_EQ(RemovalTarget(sentence, std::vector<std::string>{"jerk", "idiot"}),
            " such a nice person.");
}

TEST(RemovalInstructionTest, ListsWords) {
  EXPECT_EQ(RemovalInstruction(std::vector<std::string>{"x"}),
            "The ideal text should remove the word x, but otherwise be unchanged");
  EXPECT_NE(RemovalInstruction(std::vector<std::string>{"a", "b"}).find("remove the words a and b"),
            std::string::npos);
  EXPECT_NE(RemovalInstruction(std::vector<std::string>{"a", "b", "c"})
                .find("remove the words a, b, and c"),
            std::string::npos);
}

TEST(RemovalPromptTest, ParseInvertsBuild) {
  for (const RemovalTask& task : GenerateTaskSet(9, DefaultWordList(), 2)) {
    const auto parsed = ParseRemovalPrompt(BuildRemovalPrompt(task));
    ASSERT_TRUE(parsed.has_value()) << task.id;
    EXPECT_EQ(parsed->sentence, task.sentence);
    EXPECT_EQ(parsed->remove_words, task.remove_words);
    EXPECT_EQ(parsed->stem, task.stem);
  }
  EXPECT_FALSE(ParseRemovalPrompt("Write an excellent summary").has_value());
}

TEST(ExactMatchTest, OracleScoresPerfectly) {
  const auto tasks = GenerateTaskSet(4, DefaultWordList());
  std::vector<std::string> predictions;
  for (const RemovalTask& task : tasks) predictions.push_back(task.target);
  const auto report = EvaluateExactMatch(predictions, tasks);
  EXPECT_DOUBLE_EQ(report.overall.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(report.overall.se, 0.0);
  EXPECT_EQ(report.per_l.size(), 3u);
}

TEST(ExactMatchTest, TrimsBeforeComparing) {
  const auto tasks = GenerateTaskSet(4, DefaultWordList(), 1);
  std::vector<std::string> predictions;
  for (const RemovalTask& task : tasks) predictions.push_back("  " + std::string(Trim(task.target)) + "\n");
  EXPECT_DOUBLE_EQ(EvaluateExactMatch(predictions, tasks).overall.accuracy, 1.0);
}

TEST(ExactMatchTest, PreconditionErrors) {
  const auto tasks = GenerateTaskSet(4, DefaultWordList(), 1);
  EXPECT_THROW(EvaluateExactMatch(std::vector<std::string>{}, tasks), Error);
  EXPECT_THROW(EvaluateExactMatch(std::vector<std::string>{}, std::vector<RemovalTask>{}), Error);
}

TEST(ExactMatchTest, CorrupterStandardError) {
  // p = 520 / 1350, sqrt(p (1 - p) / 1350) = 0.0132446
  const auto tasks = GenerateTaskSet(0, DefaultWordList());
  std::vector<std::string> predictions;
  for (const RemovalTask& task : tasks) predictions.push_back(task.target);
  const auto report = EvaluateExactMatch(CorruptPredictions(predictions, 0.385, 1), tasks);
  EXPECT_EQ(report.overall.n, 1350u);
  EXPECT_NEAR(report.overall.accuracy, 520.0 / 1350.0, 1e-12);  // llround(0.615 * 1350) = 830 flips
  EXPECT_NEAR(report.overall.se, 0.0132446, 1e-6);
}

TEST(TaskIoTest, RoundTrip) {
  const auto tasks = GenerateTaskSet(2, DefaultWordList(), 1);
  std::vector<Json> rows;
  for (const RemovalTask& t : tasks) rows.push_back(ToJson(t));
  std::stringstream stream;
  for (const Json& row : rows) stream << row.dump() << "\n";
  EXPECT_EQ(LoadTasks(stream), tasks);
}

}  // namespace
}  // namespace ilf
