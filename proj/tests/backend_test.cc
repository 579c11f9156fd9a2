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

#include <cmath>
#include <random>

#include "ilf/backend.h"
#include "ilf/error.h"
#include "ilf/factory.h"
#include "ilf/mock_backends.h"
#include "ilf/wordremoval.h"
#include "test_util.h"

namespace ilf {
namespace {

TEST(NormalizedLabelProbabilityTest, MatchesDirectFormula) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-20.0, 0.0);
  for (int i = 0; i < 500; ++i) {
    const double lg = u(rng);
    const double lb = u(rng);
    const double direct = std::exp(lg) / (std::exp(lg) + std::exp(lb));
    EXPECT_NEAR(NormalizedLabelProbability(lg, lb), direct, 1e-12);
    EXPECT_NEAR(NormalizedLabelProbability(lg, lb) + NormalizedLabelProbability(lb, lg),
                1.0, 1e-12);
  }
}

TEST(NormalizedLabelProbabilityTest, ExtremesAndDegenerate) {
  EXPECT_DOUBLE_EQ(NormalizedLabelProbability(-1.0, kLogZero), 1.0);
  EXPECT_DOUBLE_EQ(NormalizedLabelProbability(kLogZero, -1.0), 0.0);
  // exp(-2000) underflows; the logistic form does not.
  EXPECT_NEAR(NormalizedLabelProbability(-1000.0, -1001.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  try {
    NormalizedLabelProbability(kLogZero, kLogZero);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateProbe);
  }
}

TEST(GenerateTest, ValidatesArguments) {
  auto policy = std::make_shared<RuleMockPolicy>();
  SamplingParams params;
  EXPECT_THROW(Generate(*policy, "x", params, 0), Error);
  params.max_tokens = 0;
  EXPECT_THROW(Generate(*policy, "x", params, 1), Error);
}

TEST(RuleMockTest, AnswersRemovalPromptsWithTarget) {
  auto policy = std::make_shared<RuleMockPolicy>();
  for (const RemovalTask& task : GenerateTaskSet(1, DefaultWordList(), 2)) {
    const auto out = Generate(*policy, BuildRemovalPrompt(task), SamplingParams{}, 2);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0], task.target);
    EXPECT_EQ(out[1], task.target);
  }
}

TEST(RuleMockTest, EchoesFirstSentenceOfText) {
  RuleMockPolicy policy;
  EXPECT_EQ(policy.Respond("Title: t\n\nText: First one. Second one.\n\nTL;DR:"),
            " First one.");
}

TEST(RuleMockTest, RefusesLogprobs) {
  auto policy = std::make_shared<RuleMockPolicy>();
  try {
    policy->SequenceLogprob("a", "b");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapability);
  }
}

TEST(RuleMockTest, CorruptionLeavesSomeWordsAndAdaptationLearnsThem) {
  auto policy = std::make_shared<RuleMockPolicy>("m", 0.5, 3);
  const auto words = DefaultWordList();
  size_t known = 0;
  for (const std::string& w : words) known += policy->Knows(w);
  EXPECT_GT(known, 0u);
  EXPECT_LT(known, words.size());

  const auto tasks = GenerateTaskSet(2, words, 5);
  std::vector<FinetuneRecord> records;
  for (const RemovalTask& task : tasks) {
    records.push_back({BuildRemovalPrompt(task), task.target, 1.0});
  }
  auto adapted = std::dynamic_pointer_cast<const RuleMockPolicy>(policy->Adapted(records));
  ASSERT_NE(adapted, nullptr);
  for (const RemovalTask& task : tasks) {
    for (const std::string& w : task.remove_words) EXPECT_TRUE(adapted->Knows(w));
  }
  // Imperfect demonstrations teach nothing.
  std::vector<FinetuneRecord> wrong = {{BuildRemovalPrompt(tasks[0]), " such a nice person and x.", 1.0}};
  auto unchanged = std::dynamic_pointer_cast<const RuleMockPolicy>(policy->Adapted(wrong));
  EXPECT_EQ(unchanged->learned().size(), 0u);
}

TEST(ScriptedTest, ReplaysCompletionsInOrder) {
  auto policy = std::make_shared<ScriptedPolicy>();
  policy->Add(Fixture{"P", {"a.", "b.", "c."}, {}});
  EXPECT_EQ(Generate(*policy, "P", SamplingParams{}, 5),
            (std::vector<std::string>{"a.", "b.", "c.", "a.", "b."}));
  try {
    Generate(*policy, "Q", SamplingParams{}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFixtureMiss);
  }
  EXPECT_THROW(policy->SequenceLogprob("P", "a."), Error);  // no logprobs
}

TEST(ScriptedTest, LabelFixturesGiveNormalizedProbability) {
  auto policy = std::make_shared<ScriptedPolicy>();
  policy->AddLabelFixture("Q", " Yes", std::log(0.6), " No", std::log(0.2));
  EXPECT_NEAR(LabelProbability(*policy, LabelProbe{"Q"}), 0.75, 1e-12);
  // A label the fixture does not list has probability zero.
  EXPECT_DOUBLE_EQ(LabelProbability(*policy, LabelProbe{"Q", " Yes", " Maybe"}), 1.0);
}

TEST(ScriptedTest, LoadsFixtureDirectoryInNameOrder) {
  testing::TempDir dir;
  const Json a = ToJson(Fixture{"P", {"first."}, {{-1.0}}});
  const Json b = ToJson(Fixture{"P", {"second."}, {{-2.0}}});
  WriteJsonLines(dir / "a.jsonl", std::vector<Json>{a});
  WriteJsonLines(dir / "b.jsonl", std::vector<Json>{b});
  auto policy = ScriptedPolicy::LoadDir(dir.path());
  EXPECT_EQ(Generate(*policy, "P", SamplingParams{}, 1).front(), "second.");
  EXPECT_DOUBLE_EQ(SequenceLogprob(*policy, "P", "second."), -2.0);
}

TEST(ScriptedTest, RejectsFixtureWithWrongHash) {
  Json row = ToJson(Fixture{"P", {"x."}, {}});
  row["prompt_hash"] = "0000000000000000";
  EXPECT_THROW(FixtureFromJson(row), Error);
}

TEST(CategoricalTest, SamplesAndScoresTokens) {
  auto policy = std::make_shared<CategoricalPolicy>(
      "c", std::vector<std::pair<std::string, double>>{{"a", 0.25}, {"b", 0.75}});
  SamplingParams params;
  params.max_tokens = 4;
  params.seed = 5;
  const auto out = Generate(*policy, "", params, 3);
  EXPECT_EQ(out, Generate(*policy, "", params, 3));
  for (const std::string& text : out) EXPECT_EQ(policy->CountTokens(text), 4u);
  EXPECT_NEAR(SequenceLogprob(*policy, "", "a b b"), std::log(0.25 * 0.75 * 0.75), 1e-12);
  EXPECT_EQ(SequenceLogprob(*policy, "", "a z"), kLogZero);
  // A larger n extends a smaller one.
  const auto more = Generate(*policy, "", params, 5);
  EXPECT_TRUE(std::equal(out.begin(), out.end(), more.begin()));
}

TEST(CategoricalTest, EmpiricalFrequenciesMatch) {
  auto policy = std::make_shared<CategoricalPolicy>(
      "c", std::vector<std::pair<std::string, double>>{{"a", 0.2}, {"b", 0.3}, {"c", 0.5}});
  SamplingParams params;
  params.max_tokens = 1;
  size_t counts[3] = {0, 0, 0};
  const auto out = Generate(*policy, "", params, 20000);
  for (const std::string& t : out) counts[t[0] - 'a']++;
  EXPECT_NEAR(counts[0] / 20000.0, 0.2, 0.015);
  EXPECT_NEAR(counts[1] / 20000.0, 0.3, 0.015);
  EXPECT_NEAR(counts[2] / 20000.0, 0.5, 0.015);
}

TEST(CategoricalTest, RejectsBadDistributions) {
  using Tokens = std::vector<std::pair<std::string, double>>;
  EXPECT_THROW(CategoricalPolicy("c", Tokens{{"a", 0.5}}), Error);
  EXPECT_THROW(CategoricalPolicy("c", Tokens{{"a b", 1.0}}), Error);
  EXPECT_THROW(CategoricalPolicy("c", Tokens{}), Error);
}

TEST(ImitationTest, LookupWithFallback) {
  auto root = std::make_shared<RuleMockPolicy>();
  const std::vector<FinetuneRecord> records = {{"P", "z", 1.0}};
  auto policy = std::make_shared<ImitationPolicy>("imit", records, root);
  EXPECT_EQ(Generate(*policy, "P", SamplingParams{}, 1).front(), "z");
  const std::string other = "Text: Unseen post.\n\nTL;DR:";
  EXPECT_EQ(Generate(*policy, other, SamplingParams{}, 1), Generate(*root, other, SamplingParams{}, 1));
  EXPECT_DOUBLE_EQ(policy->SequenceLogprob("P", "z"), 0.0);
  EXPECT_EQ(policy->SequenceLogprob("P", "y"), kLogZero);
}

TEST(ImitationTest, HighestWeightWins) {
  auto root = std::make_shared<RuleMockPolicy>();
  const std::vector<FinetuneRecord> records = {{"P", "low", 0.2}, {"P", "high", 0.7}, {"P", "tie", 0.7}};
  ImitationPolicy policy("imit", records, root);
  EXPECT_EQ(policy.Generate("P", SamplingParams{}, 1).front(), "high");
  EXPECT_EQ(policy.table_size(), 1u);
}

TEST(FactoryTest, BuildsEveryKind) {
  BackendSpec spec;
  EXPECT_EQ(MakePolicy(spec)->kind(), BackendKind::kRuleMock);
  spec.kind = "categorical";
  spec.tokens = {{"x", 1.0}};
  EXPECT_EQ(MakePolicy(spec)->kind(), BackendKind::kCategorical);
  spec.kind = "http";
  spec.base_url = "http://127.0.0.1:9/v1";
  EXPECT_EQ(MakePolicy(spec)->kind(), BackendKind::kHttp);
  testing::TempDir dir;
  spec.kind = "scripted";
  spec.fixtures_dir = dir.path().string();
  EXPECT_EQ(MakePolicy(spec)->kind(), BackendKind::kScripted);
  spec.kind = "gpt";
  try {
    MakePolicy(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.is_validation());
  }
}

}  // namespace
}  // namespace ilf
