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

#include <random>

#include "ilf/error.h"
#include "ilf/mock_backends.h"
#include "ilf/refine.h"
#include "ilf/text.h"
#include "ilf/wordremoval.h"
#include "test_util.h"

namespace ilf {
namespace {

TEST(PostprocessTest, WorkedExamples) {
  EXPECT_EQ(Postprocess("\n\n A summary.", 48), "A summary.");
  EXPECT_EQ(Postprocess("Good summary. Trailing fragment without", 48), "Good summary.");
  EXPECT_EQ(Postprocess("One line.\nSecond line.", 48), "One line.");
  EXPECT_EQ(Postprocess("  hi there.\nmore", 48), "hi there.");
}

TEST(PostprocessTest, SentenceEndsAndClosers) {
  EXPECT_EQ(Postprocess("He said \"stop.\" Then", 48), "He said \"stop.\"");
  EXPECT_EQ(Postprocess("Really?! ok", 48), "Really?!");
  EXPECT_EQ(Postprocess("(fine.) and", 48), "fine.)");
  EXPECT_EQ(Postprocess("no terminator at all", 48), "");
  EXPECT_EQ(Postprocess("", 48), "");
  EXPECT_EQ(Postprocess("...", 48), "");
}

TEST(PostprocessTest, TruncatesToTokenBudget) {
  // Six tokens: "A", "b", ".", "C", "d", "."
  EXPECT_EQ(Postprocess("A b. C d.", 6), "A b. C d.");
  EXPECT_EQ(Postprocess("A b. C d.", 5), "A b.");
  EXPECT_EQ(Postprocess("A b. C d.", 2), "");
}

TEST(PostprocessTest, IdempotentAndBoundedOnRandomText) {
  std::mt19937_64 rng(17);
  const std::vector<std::string> pieces = {"word", " ", "\n", ".", "!", "?", "\"", ")",
                                           ",", "caf\xC3\xA9", "\xE2\x80\x9D", "  ", "x"};
  for (int i = 0; i < 2000; ++i) {
    std::string raw;
    const int n = static_cast<int>(rng() % 30);
    for (int j = 0; j < n; ++j) raw += pieces[rng() % pieces.size()];
    const int budget = 1 + static_cast<int>(rng() % 20);
    const std::string once = Postprocess(raw, budget);
    EXPECT_EQ(Postprocess(once, budget), once) << raw;
    EXPECT_LE(CountTokens(once), static_cast<size_t>(budget));
    EXPECT_EQ(once.find('\n'), std::string::npos);
    if (!once.empty()) {
      std::string_view tail = once;
      for (bool stripped = true; stripped;) {
        stripped = false;
        if (!tail.empty() && std::string_view("\"')]}").find(tail.back()) != std::string_view::npos) {
          tail.remove_suffix(1);
          stripped = true;
        } else if (tail.ends_with("\xE2\x80\x9D") || tail.ends_with("\xE2\x80\x99")) {
          tail.remove_suffix(3);
          stripped = true;
        }
      }
      ASSERT_FALSE(tail.empty());
      EXPECT_NE(std::string_view(".!?").find(tail.back()), std::string_view::npos) << once;
    }
  }
}

TEST(GenerateRefinementsTest, ScriptedFixturesInOrder) {
  auto policy = std::make_shared<ScriptedPolicy>();
  Sample sample = testing::MakeSample("s");
  TemplateSet templates;
  const PromptTemplate& tmpl = templates.Get(TemplateId::kRefineWithFeedback);
  policy->Add(Fixture{RenderPrompt(tmpl, sample), {" one.", " two.", " three.", " four.", " five."}, {}});
  const RefinementSet set = GenerateRefinements(*policy, tmpl, sample, 5, SamplingParams{});
  EXPECT_EQ(set.sample_id, "s");
  EXPECT_EQ(set.candidates, (std::vector<std::string>{"one.", "two.", "three.", "four.", "five."}));
  EXPECT_FALSE(set.scored());
}

TEST(GenerateRefinementsTest, RuleMockGivesOracleTarget) {
  auto policy = std::make_shared<RuleMockPolicy>();
  TemplateSet templates;
  for (const RemovalTask& task : GenerateTaskSet(8, DefaultWordList(), 1)) {
    const RefinementSet set = GenerateRefinements(
        *policy, templates.Get(TemplateId::kWordRemoval), RemovalSample(task), 3, SamplingParams{});
    for (const std::string& c : set.candidates) EXPECT_EQ(c, Trim(task.target));
  }
}

TEST(GenerateRefinementsTest, RequiresFeedback) {
  auto policy = std::make_shared<RuleMockPolicy>();
  TemplateSet templates;
  Sample sample = testing::MakeSample("s");
  sample.feedback.clear();
  try {
    GenerateRefinements(*policy, templates.Get(TemplateId::kRefineWithFeedback), sample, 2,
                        SamplingParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPrecondition);
  }
  EXPECT_NO_THROW(GenerateRefinements(*policy, templates.Get(TemplateId::kRefineWithoutFeedback),
                                      sample, 2, SamplingParams{}));
  EXPECT_THROW(GenerateRefinements(*policy, templates.Get(TemplateId::kRefineWithoutFeedback),
                                   sample, 0, SamplingParams{}),
               Error);
}

}  // namespace
}  // namespace ilf
