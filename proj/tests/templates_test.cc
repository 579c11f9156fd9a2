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

#include "ilf/error.h"
#include "ilf/templates.h"
#include "ilf/wordremoval.h"
#include "test_util.h"

namespace ilf {
namespace {

class GoldenTemplateTest : public ::testing::TestWithParam<TemplateId> {};

TEST_P(GoldenTemplateTest, DefaultBodyMatchesGolden) {
  const std::string name(TemplateName(GetParam()));
  EXPECT_EQ(DefaultTemplateBody(GetParam()), testing::Golden(name + ".txt")) << name;
}

TEST_P(GoldenTemplateTest, ShippedAssetMatchesDefault) {
  const std::string name(TemplateName(GetParam()));
  const TemplateSet shipped = TemplateSet::Load(testing::SourceDir() / "templates");
  EXPECT_EQ(shipped.Get(GetParam()).body(), DefaultTemplateBody(GetParam())) << name;
}

TEST_P(GoldenTemplateTest, NameRoundTrips) {
  EXPECT_EQ(ParseTemplateName(TemplateName(GetParam())), GetParam());
}

INSTANTIATE_TEST_SUITE_P(All, GoldenTemplateTest, ::testing::ValuesIn(kAllTemplateIds),
                         [](const auto& info) {
                           return std::string(TemplateName(info.param));
                         });

TEST(TemplateTest, WordRemovalReproducesWorkedExample) {
  RemovalTask task;
  task.id = "example";
  task.sentence = "You are such a jerk, and a nice person, and an idiot.";
  task.k = 2;
  task.remove_words = {"jerk"};
  task.stem = "You are";
  task.target = RemovalTarget(task.sentence, task.remove_words);
  const std::string prompt = BuildRemovalPrompt(task);
  EXPECT_EQ(prompt, testing::Golden("word_removal_example.txt"));
  EXPECT_TRUE(prompt.ends_with("be unchanged: You are"));
  EXPECT_EQ(task.target, testing::Golden("word_removal_example_target.txt"));
}

TEST(TemplateTest, PlaceholdersInOrderOfFirstUse) {
  const PromptTemplate t(TemplateId::kInstructRm5, DefaultTemplateBody(TemplateId::kInstructRm5));
  EXPECT_EQ(t.placeholders(),
            (std::vector<std::string>{"feedback", "title", "text", "summary", "refinement"}));
}

TEST(TemplateTest, RenderSubstitutesAndRejectsMissingValues) {
  const PromptTemplate t(TemplateId::kInitialSummary,
                         DefaultTemplateBody(TemplateId::kInitialSummary));
  EXPECT_EQ(t.Render({{"title", "T"}, {"text", "P"}}),
            "Write an excellent summary of the given text.\n\nTitle: T\n\nText: P\n\nTL;DR:");
  try {
    t.Render({{"title", "T"}});
    FAIL() << "expected a template error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTemplate);
    EXPECT_NE(std::string(e.what()).find("text"), std::string::npos);
  }
  EXPECT_THROW(t.Render({{"title", "T"}, {"text", ""}}), Error);
}

TEST(TemplateTest, ValuesAreNotRescanned) {
  const PromptTemplate t(TemplateId::kInitialSummary,
                         DefaultTemplateBody(TemplateId::kInitialSummary));
  const std::string out = t.Render({{"title", "{text}"}, {"text", "body"}});
  EXPECT_NE(out.find("Title: {text}"), std::string::npos);
}

TEST(TemplateTest, OverrideMustKeepPlaceholderSet) {
  TemplateSet set;
  EXPECT_NO_THROW(set.Override(TemplateId::kInitialSummary, "Summarize {title}: {text}\nTL;DR:"));
  EXPECT_EQ(set.Get(TemplateId::kInitialSummary).body(), "Summarize {title}: {text}\nTL;DR:");
  EXPECT_THROW(set.Override(TemplateId::kInitialSummary, "Summarize {text}"), Error);
}

TEST(TemplateTest, LoadReadsOverridesFromDirectory) {
  testing::TempDir dir;
  WriteTextFile(dir / "initial_summary.txt", "T={title} X={text}\n");
  const TemplateSet set = TemplateSet::Load(dir.path());
  EXPECT_EQ(set.Get(TemplateId::kInitialSummary).body(), "T={title} X={text}");
  EXPECT_EQ(set.Get(TemplateId::kBinaryRm).body(), DefaultTemplateBody(TemplateId::kBinaryRm));
}

TEST(TemplateTest, SampleValuesProvideStem) {
  Sample sample = testing::MakeSample("a");
  sample.post = "You are such a badword01, and a nice person.";
  const auto values = SampleValues(sample);
  EXPECT_EQ(values.at("stem"), "You are");
  EXPECT_EQ(values.at("text"), sample.post);
  EXPECT_EQ(values.at("summary"), sample.initial_output);
}

TEST(TemplateTest, InstructRmIndexOutOfRange) {
  EXPECT_THROW(InstructRmTemplate(0), Error);
  EXPECT_THROW(InstructRmTemplate(6), Error);
  EXPECT_EQ(InstructRmTemplate(3), TemplateId::kInstructRm3);
}

}  // namespace
}  // namespace ilf
