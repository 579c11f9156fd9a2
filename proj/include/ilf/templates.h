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

#ifndef ILF_TEMPLATES_H_
#define ILF_TEMPLATES_H_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ilf/core.h"

namespace ilf {

enum class TemplateId {
  kInitialSummary,
  kRefineWithFeedback,
  kRefineWithoutFeedback,
  kWordRemoval,
  kInstructRm1,
  kInstructRm2,
  kInstructRm3,
  kInstructRm4,
  kInstructRm5,
  kFinetuneFeedbackPrompt,
  kFinetuneFeedbackCompletion,
  kBinaryRm,
  kComparisonRm,
};

inline constexpr std::array kAllTemplateIds = {
    TemplateId::kInitialSummary,       TemplateId::kRefineWithFeedback,
    TemplateId::kRefineWithoutFeedback, TemplateId::kWordRemoval,
    TemplateId::kInstructRm1,          TemplateId::kInstructRm2,
    TemplateId::kInstructRm3,          TemplateId::kInstructRm4,
    TemplateId::kInstructRm5,          TemplateId::kFinetuneFeedbackPrompt,
    TemplateId::kFinetuneFeedbackCompletion, TemplateId::kBinaryRm,
    TemplateId::kComparisonRm,
};

std::string_view TemplateName(TemplateId id);
TemplateId ParseTemplateName(std::string_view name);
TemplateId InstructRmTemplate(int prompt_index);

using TemplateValues = std::map<std::string, std::string, std::less<>>;

// A prompt body with {placeholder} slots.
class PromptTemplate {
 public:
  PromptTemplate(TemplateId id, std::string body);

  TemplateId id() const { return id_; }
  const std::string& body() const { return body_; }
  // Placeholder names in order of first appearance.
  const std::vector<std::string>& placeholders() const { return placeholders_; }

  // Substitutes every placeholder. A missing or empty value is a
  // TemplateError naming the placeholder.
  std::string Render(const TemplateValues& values) const;

 private:
  TemplateId id_;
  std::string body_;
  std::vector<std::string> placeholders_;
};

// The shipped default body for `id`.
const std::string& DefaultTemplateBody(TemplateId id);

// All templates, defaults optionally overridden by `<dir>/<name>.txt`.
// Overrides must use exactly the placeholder set of the default.
class TemplateSet {
 public:
  TemplateSet();
  static TemplateSet Load(const std::filesystem::path& dir);

  const PromptTemplate& Get(TemplateId id) const;
  void Override(TemplateId id, std::string body);

 private:
  std::vector<PromptTemplate> templates_;
};

// Placeholder values drawn from a sample: title, text, summary, feedback.
TemplateValues SampleValues(const Sample& sample);

std::string RenderPrompt(const PromptTemplate& tmpl, const Sample& sample,
                         const TemplateValues& extra = {});

}  // namespace ilf

#endif  // ILF_TEMPLATES_H_
