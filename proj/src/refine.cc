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

#include "ilf/refine.h"

#include "ilf/error.h"
#include "ilf/text.h"

namespace ilf {

namespace {

bool IsTerminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool IsCloser(std::string_view text, size_t pos, size_t& width) {
  static constexpr std::string_view kAsciiClosers = "\"')]}";
  if (kAsciiClosers.find(text[pos]) != std::string_view::npos) {
    width = 1;
    return true;
  }
  // U+2019 and U+201D, the typographic closing quotes.
  for (std::string_view quote : {"\xE2\x80\x99", "\xE2\x80\x9D"}) {
    if (text.substr(pos).starts_with(quote)) {
      width = quote.size();
      return true;
    }
  }
  return false;
}

// Length of the prefix that ends with the last sentence terminator and any
// closing quotes or brackets right after it; 0 if there is none.
size_t CompleteSentencePrefix(std::string_view text) {
  size_t keep = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    if (!IsTerminator(text[i])) continue;
    size_t end = i + 1;
    size_t width = 0;
    while (end < text.size() && (IsTerminator(text[end]) ||
                                 IsCloser(text, end, width))) {
      end += IsTerminator(text[end]) ? 1 : width;
    }
    keep = end;
    i = end - 1;
  }
  return keep;
}

}  // namespace

std::string Postprocess(std::string_view raw, int max_tokens) {
  std::string_view text = raw;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t next = pos;
    if (IsWordCodePoint(DecodeUtf8(text, next))) break;
    pos = next;
  }
  text.remove_prefix(pos);
  if (const size_t newline = text.find('\n'); newline != std::string_view::npos) {
    text = text.substr(0, newline);
  }
  text = TrimRight(text);
  if (max_tokens >= 0) {
    const std::vector<TokenSpan> tokens = Tokenize(text);
    if (tokens.size() > static_cast<size_t>(max_tokens)) {
      text = max_tokens == 0 ? std::string_view()
                             : text.substr(0, tokens[max_tokens - 1].end);
    }
  }
  text = text.substr(0, CompleteSentencePrefix(text));
  return std::string(TrimRight(text));
}

RefinementSet GenerateRefinements(const Policy& policy,
                                  const PromptTemplate& tmpl,
                                  const Sample& sample, int n,
                                  const SamplingParams& params) {
  Require(n >= 1, "generate_refinements needs n >= 1");
  const auto& needs = tmpl.placeholders();
  if (std::find(needs.begin(), needs.end(), "feedback") != needs.end() &&
      sample.feedback.empty()) {
    Fail(ErrorKind::kPrecondition,
         "sample '" + sample.id + "' has no feedback to refine with");
  }
  const std::string prompt = RenderPrompt(tmpl, sample);
  RefinementSet set;
  set.sample_id = sample.id;
  for (const std::string& raw : Generate(policy, prompt, params, n)) {
    set.candidates.push_back(Postprocess(raw, params.max_tokens));
  }
  return set;
}

}  // namespace ilf
