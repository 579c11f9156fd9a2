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
#include <sstream>

#include "ilf/core.h"
#include "ilf/error.h"
#include "test_util.h"

namespace ilf {
namespace {

TEST(StableHashTest, MatchesFnv1aReferenceValues) {
  // Published FNV-1a 64 test vectors.
  EXPECT_EQ(StableHash(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(StableHash("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(StableHash("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(HexDigest(""), "cbf29ce484222325");
}

TEST(SeedTest, StreamsAreIndependentAndRepeatable) {
  EXPECT_EQ(MixSeed(7, "sampling"), MixSeed(7, "sampling"));
  EXPECT_NE(MixSeed(7, "sampling"), MixSeed(7, "scorer"));
  EXPECT_NE(MixSeed(7, "sampling"), MixSeed(8, "sampling"));
  auto a = MakeStream(3, "x");
  auto b = MakeStream(3, "x");
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
}

TEST(BetaTest, ParsesInfinityAndNumbers) {
  EXPECT_TRUE(Beta::Parse("infinity").is_infinite());
  EXPECT_TRUE(Beta::Parse("inf").is_infinite());
  EXPECT_DOUBLE_EQ(Beta::Parse("2.5").value(), 2.5);
  EXPECT_EQ(Beta::Parse("2.5").ToString(), Beta::Finite(2.5).ToString());
  EXPECT_THROW(Beta::Parse("warm"), Error);
}

TEST(FeedbackCategoryTest, RoundTripsAllNames) {
  for (auto c : {FeedbackCategory::kCoverage, FeedbackCategory::kAccuracy,
                 FeedbackCategory::kCoherence, FeedbackCategory::kOther}) {
    EXPECT_EQ(ParseFeedbackCategory(ToString(c)), c);
  }
  EXPECT_THROW(ParseFeedbackCategory("style"), Error);
}

std::string RandomText(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "word", " ", "\n", "\"quoted\"", "\xC3\xA9t\xC3\xA9", "\xE2\x9C\x93", "\\", "{x}", "."};
  std::string out;
  const int n = static_cast<int>(rng() % 8);
  for (int i = 0; i < n; ++i) out += pieces[rng() % pieces.size()];
  return out;
}

TEST(SerializationTest, RandomRecordsRoundTrip) {
  std::mt19937_64 rng(11);
  testing::TempDir dir;
  std::vector<Sample> samples;
  std::vector<RefinementSet> sets;
  std::vector<FinetuneRecord> records;
  for (int i = 0; i < 100; ++i) {
    Sample s;
    s.id = "s" + std::to_string(i);
    s.title = RandomText(rng);
    s.post = RandomText(rng);
    s.initial_output = RandomText(rng);
    s.feedback = RandomText(rng);
    s.feedback_category = static_cast<FeedbackCategory>(rng() % 4);
    if (rng() % 2) s.ideal_output = RandomText(rng);
    if (rng() % 2) {
      s.comparison = Comparison{RandomText(rng), RandomText(rng),
                                rng() % 2 ? Preferred::kA : Preferred::kB};
    }
    samples.push_back(s);

    RefinementSet set;
    set.sample_id = s.id;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int j = 0; j < n; ++j) set.candidates.push_back(RandomText(rng));
    set.scores.assign(static_cast<size_t>(n), 0.0);
    set.weights.assign(static_cast<size_t>(n), 0.0);
    set.selected_index = static_cast<int>(rng() % static_cast<uint64_t>(n));
    set.scores[static_cast<size_t>(set.selected_index)] = 1.0;
    set.weights[static_cast<size_t>(set.selected_index)] = 1.0;
    sets.push_back(set);

    records.push_back({"p" + RandomText(rng), "c" + RandomText(rng),
                       0.25 + 0.75 * static_cast<double>(rng() % 100) / 99.0});
  }
  WriteSamples(samples, dir / "samples.jsonl");
  WriteRefinements(sets, dir / "refinements.jsonl");
  WriteFinetuneDataset(records, dir / "finetune.jsonl");
  EXPECT_EQ(LoadSamples(dir / "samples.jsonl"), samples);
  EXPECT_EQ(LoadRefinements(dir / "refinements.jsonl"), sets);
  EXPECT_EQ(LoadFinetuneDataset(dir / "finetune.jsonl"), records);
}

TEST(SerializationTest, SampleFieldsInDeclaredOrder) {
  const Json json = ToJson(testing::MakeSample("a"));
  std::vector<std::string> keys;
  for (const auto& item : json.items()) keys.push_back(item.key());
  const std::vector<std::string> expected = {"id", "title", "post", "initial_output",
                                             "feedback", "feedback_category"};
  ASSERT_GE(keys.size(), expected.size());
  EXPECT_TRUE(std::equal(expected.begin(), expected.end(), keys.begin()));
}

TEST(SerializationTest, TinyWeightsAreWrittenAsZero) {
  RefinementSet set;
  set.sample_id = "x";
  set.candidates = {"a", "b"};
  set.scores = {0.0, 100.0};
  set.weights = {1e-15, 1.0 - 1e-15};
  set.selected_index = 1;
  EXPECT_EQ(ToJson(set)["weights"][0].get<double>(), 0.0);
}

TEST(LoadSamplesTest, DuplicateIdIsValidationError) {
  std::istringstream in(
      R"({"id":"a","title":"t","post":"p","initial_output":"x","feedback":"f"})"
      "\n"
      R"({"id":"a","title":"t","post":"p","initial_output":"x","feedback":"f"})"
      "\n");
  try {
    LoadSamples(in);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_TRUE(e.is_validation());
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
}

TEST(LoadSamplesTest, MalformedLineReportsLineNumber) {
  std::istringstream in(
      R"({"id":"a","title":"t","post":"p","initial_output":"x","feedback":"f"})"
      "\n{not json\n");
  try {
    LoadSamples(in);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LoadSamplesTest, MissingRequiredFieldFails) {
  std::istringstream in(R"({"id":"a","title":"t","post":"p","feedback":"f"})");
  EXPECT_THROW(LoadSamples(in), Error);
}

TEST(FinetuneRecordTest, ValidatesWeightRange) {
  EXPECT_NO_THROW((FinetuneRecord{"p", "c", 1.0}).Validate());
  EXPECT_THROW((FinetuneRecord{"p", "c", 0.0}).Validate(), Error);
  EXPECT_THROW((FinetuneRecord{"p", "c", 1.5}).Validate(), Error);
  EXPECT_THROW((FinetuneRecord{"", "c", 1.0}).Validate(), Error);
}

TEST(RefinementSetTest, ValidateChecksArgmaxAndNormalisation) {
  RefinementSet set;
  set.sample_id = "x";
  set.candidates = {"a", "b"};
  set.scores = {0.2, 0.8};
  set.weights = {0.0, 1.0};
  set.selected_index = 1;
  EXPECT_NO_THROW(set.Validate());
  set.selected_index = 0;
  EXPECT_THROW(set.Validate(), Error);
  set.selected_index = 1;
  set.weights = {0.5, 0.6};
  EXPECT_THROW(set.Validate(), Error);
}

TEST(RunConfigTest, JsonRoundTrip) {
  RunConfig config;
  config.backend.kind = "rule_mock";
  config.backend.corruption = 0.5;
  config.backend.seed = 9;
  config.refinement_backend = BackendSpec{};
  config.scorer.kind = "max_length";
  config.n = 3;
  config.beta = Beta::Finite(4.0);
  config.iterations = 2;
  config.lambda = 0.05;
  config.seed = 42;
  config.finetune_mode = FinetuneMode::kFromScratchConcat;
  const RunConfig back = RunConfig::FromJson(config.ToJson());
  EXPECT_EQ(back.ToJson(), config.ToJson());
  EXPECT_EQ(back.backend.corruption, 0.5);
  EXPECT_EQ(back.beta, Beta::Finite(4.0));
  EXPECT_EQ(back.finetune_backend.kind, "imitation");
}

TEST(RunConfigTest, RejectsInvalidValues) {
  EXPECT_THROW(RunConfig::FromJson(Json{{"n", 0}}), Error);
  EXPECT_THROW(RunConfig::FromJson(Json{{"lambda", 2.0}}), Error);
  EXPECT_THROW(RunConfig::FromJson(Json{{"finetune_mode", "sometimes"}}), Error);
  EXPECT_THROW(RunConfig::FromJson(Json::array()), Error);
}

TEST(ErrorTest, ValidationKindsMapToValidation) {
  EXPECT_TRUE(Error(ErrorKind::kValidation, "x").is_validation());
  EXPECT_TRUE(Error(ErrorKind::kPrecondition, "x").is_validation());
  EXPECT_FALSE(Error(ErrorKind::kBackend, "x").is_validation());
  EXPECT_FALSE(Error(ErrorKind::kResumableAbort, "x").is_validation());
}

}  // namespace
}  // namespace ilf
