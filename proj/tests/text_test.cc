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

#include "ilf/text.h"

namespace ilf {
namespace {

TEST(TokenizeTest, WordsAndPunctuation) {
  EXPECT_EQ(TokenStrings("You are such a nice person."),
            (std::vector<std::string>{"You", "are", "such", "a", "nice", "person", "."}));
  EXPECT_EQ(TokenStrings("TL;DR: it's"),
            (std::vector<std::string>{"TL", ";", "DR", ":", "it", "'", "s"}));
  EXPECT_EQ(CountTokens(""), 0u);
  EXPECT_EQ(CountTokens("   \n\t "), 0u);
}

TEST(TokenizeTest, SpansCoverTokenBytes) {
  const std::string text = "  ab, c";
  const auto spans = Tokenize(text);
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_EQ(text.substr(spans[0].begin, spans[0].end - spans[0].begin), "ab");
  EXPECT_EQ(text.substr(spans[1].begin, spans[1].end - spans[1].begin), ",");
  EXPECT_EQ(spans[2].begin, 6u);
}

TEST(TokenizeTest, NonAsciiLettersJoinWords) {
  EXPECT_EQ(TokenStrings("caf\xC3\xA9 ol\xC3\xA9!"),
            (std::vector<std::string>{"caf\xC3\xA9", "ol\xC3\xA9", "!"}));
  // Curly quotes are punctuation.
  EXPECT_EQ(CountTokens("\xE2\x80\x9Chi\xE2\x80\x9D"), 3u);
}

TEST(Utf8Test, ValidityAndReplacement) {
  EXPECT_TRUE(IsValidUtf8("plain"));
  EXPECT_TRUE(IsValidUtf8("\xE2\x9C\x93"));
  EXPECT_FALSE(IsValidUtf8("\xFF"));
  EXPECT_FALSE(IsValidUtf8("\xE2\x9C"));
  EXPECT_FALSE(IsValidUtf8("\xC0\xAF"));  // overlong
  size_t pos = 0;
  EXPECT_EQ(DecodeUtf8("\xFF" "a", pos), U'�');
  EXPECT_EQ(pos, 1u);
  // Invalid bytes still tokenize instead of throwing.
  EXPECT_EQ(CountTokens("a \xFF b"), 3u);
}

TEST(TrimTest, Basics) {
  EXPECT_EQ(Trim("  a b \n"), "a b");
  EXPECT_EQ(TrimRight("  a "), "  a");
  EXPECT_EQ(SplitWhitespace(" a  b\tc\n"), (std::vector<std::string>{"a", "b", "c"}));
}

}  // namespace
}  // namespace ilf
