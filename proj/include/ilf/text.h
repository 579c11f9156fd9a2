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

#ifndef ILF_TEXT_H_
#define ILF_TEXT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ilf {

// Byte range [begin, end) of one token inside the tokenized text.
struct TokenSpan {
  size_t begin = 0;
  size_t end = 0;
};

// Approximate tokenizer shared by the generation cap and the annotation
// service budget: runs of word characters form one token, every other
// non-space code point is a token on its own, whitespace separates.
std::vector<TokenSpan> Tokenize(std::string_view text);
std::vector<std::string> TokenStrings(std::string_view text);
size_t CountTokens(std::string_view text);

// ASCII letters/digits, plus non-ASCII code points outside the common
// punctuation/symbol/space blocks.
bool IsWordCodePoint(char32_t cp);

// Decodes one code point at `pos`, advancing it. Invalid sequences decode as
// U+FFFD and consume one byte.
char32_t DecodeUtf8(std::string_view text, size_t& pos);
bool IsValidUtf8(std::string_view text);

std::string_view Trim(std::string_view text);
std::string_view TrimRight(std::string_view text);
std::vector<std::string> SplitWhitespace(std::string_view text);

}  // namespace ilf

#endif  // ILF_TEXT_H_
