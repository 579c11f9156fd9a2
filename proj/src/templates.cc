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

#include "ilf/templates.h"

#include <algorithm>

#include "ilf/error.h"
#include "ilf/text.h"

namespace ilf {

namespace {

constexpr std::string_view kInstructRmPreamble =
    "Here's a summary of a Reddit post, feedback on the summary, and a new "
    "summary. You will be asked to determine whether the new summary "
    "incorporates the feedback provided.";
constexpr std::string_view kGoodSummary =
    "A good summary is a short piece of text that has the essence of the "
    "original text. A good summary tries to accomplish the same purpose and "
    "conveys the same information as the original text.";
constexpr std::string_view kRemember =
    "Remember, you will be asked to determine whether the new summary "
    "incorporates the feedback provided.";
constexpr std::string_view kExcellent =
    "An excellent summary is coherent, accurate, concise, and detailed.";

std::string Join(std::initializer_list<std::string_view> paragraphs) {
  std::string out;
  for (std::string_view p : paragraphs) {
    if (!out.empty()) out += "\n\n";
    out += p;
  }
  return out;
}

std::string Cat(std::initializer_list<std::string_view> parts) {
  std::string out;
  for (std::string_view p : parts) out += p;
  return out;
}

std::string BuildDefault(TemplateId id) {
  switch (id) {
    case TemplateId::kInitialSummary:
      return Join({"Write an excellent summary of the given text.",
                   "Title: {title}", "Text: {text}", "TL;DR:"});
    case TemplateId::kRefineWithFeedback:
      return Join({"Write an excellent summary that incorporates the feedback "
                   "on the given summary and is better than the given "
                   "summary.",
                   "Title: {title}", "Text: {text}", "Summary: {summary}",
                   "Feedback on Summary: {feedback}", "Improved TL;DR:"});
    case TemplateId::kRefineWithoutFeedback:
      return Join({"Write an excellent summary that is better than the given "
                   "summary.",
                   "Title: {title}", "Text: {text}", "Summary: {summary}",
                   "Improved TL;DR:"});
    case TemplateId::kWordRemoval:
      return "In this text, many toxic and offensive words are used: {text} "
             "{feedback}: {stem}";
    case TemplateId::kInstructRm1:
      return Join({kInstructRmPreamble, kGoodSummary, "Post title: {title}",
                   "Below, there's the content of the post that was "
                   "summarized.",
                   "Original post: {text}", "Original summary: {summary}",
                   "A human then provided feedback on the above summary.",
                   "Feedback: {feedback}",
                   "Based on this feedback, a new summary was written.",
                   "New summary: {refinement}",
                   "Does this new summary incorporate the feedback provided? "
                   "Answer Yes or No.",
                   "Answer:"});
    case TemplateId::kInstructRm2:
      return Join({"Post title: {title}", "Original post: {text}",
                   "Original summary: {summary}", "Feedback: {feedback}",
                   "New summary: {refinement}",
                   "Question: Does the new summary incorporate the feedback "
                   "provided? Answer Yes or No.",
                   "Answer:"});
    case TemplateId::kInstructRm3:
      return Join({"You will be given a Reddit post title, its content, an "
                   "original summary of that post, and feedback for that "
                   "summary. Then, your goal will be to determine whether the "
                   "new summary improves upon the original with respect to "
                   "provided feedback.",
                   "Post title: {title}", "Post content: {text}",
                   "Original summary: {summary}", "Feedback: {feedback}",
                   "New summary: {refinement}",
                   "Question: Does the new summary incorporate the feedback "
                   "provided? Answer True or False.",
                   "Answer:"});
    case TemplateId::kInstructRm4:
      return Join({kInstructRmPreamble,
                   Cat({kGoodSummary, " ", kRemember}),
                   "Post title: {title}",
                   "Below, there's the content of the post that was "
                   "summarized.",
                   "Original Post: {text}",
                   Cat({kRemember, " Here's the original summary."}),
                   "Original summary: {summary}",
                   Cat({kRemember,
                        " A human then provided feedback on the above "
                        "summary."}),
                   "Feedback: {feedback}",
                   "Based on this feedback, a new summary was written.",
                   "New summary: {refinement}",
                   "Does this new summary incorporate the feedback provided? "
                   "Answer Yes or No.",
                   "Answer:"});
    case TemplateId::kInstructRm5:
      return Join({kInstructRmPreamble,
                   "The feedback was:\nFeedback: {feedback}",
                   "Here's the post that was summarized in the first place.",
                   "Post title: {title}", "Original Post: {text}",
                   Cat({kRemember, " Here's the original summary."}),
                   "Original summary: {summary}",
                   Cat({kRemember,
                        " A human then provided feedback on the above "
                        "summary. Here's the feedback again."}),
                   "Feedback: {feedback}",
                   "Based on this feedback, a new summary was written.",
                   "New summary: {refinement}",
                   "Does this new summary incorporate the feedback provided? "
                   "Answer True or False.",
                   "Answer:"});
    case TemplateId::kFinetuneFeedbackPrompt:
      return Join({"Write an excellent summary that incorporates the feedback "
                   "on the given summary and is better than the given "
                   "summary.",
                   "Title: {title}", "Text: {text}", "Summary: {summary}",
                   "Feedback on summary:"});
    case TemplateId::kFinetuneFeedbackCompletion:
      return " {feedback}\n\nImproved TL;DR: {refinement}\n###";
    case TemplateId::kBinaryRm:
      return Join({"Title: {title}", "Text: {text}", "TL;DR: {summary}",
                   Cat({"Question: Is the above an excellent summary of the "
                        "given text? ",
                        kExcellent, " Answer with Yes or No."}),
                   "Answer:"});
    case TemplateId::kComparisonRm:
      return Join({"Title: {title}", "Text: {text}",
                   "Summary A: {summary_a}", "Summary B: {summary_b}",
                   Cat({"Question: Which summary is the better one? ",
                        kExcellent, " Answer with A or B."}),
                   "Answer:"});
  }
  Fail(ErrorKind::kValidation, "unknown template id");
}

std::vector<std::string> ScanPlaceholders(std::string_view body) {
  std::vector<std::string> names;
  size_t pos = 0;
  while ((pos = body.find('{', pos)) != std::string_view::npos) {
    const size_t close = body.find('}', pos + 1);
    if (close == std::string_view::npos) {
      Fail(ErrorKind::kTemplate, "unterminated placeholder in template body");
    }
    std::string name(body.substr(pos + 1, close - pos - 1));
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      names.push_back(std::move(name));
    }
    pos = close + 1;
  }
  return names;
}

}  // namespace

std::string_view TemplateName(TemplateId id) {
  switch (id) {
    case TemplateId::kInitialSummary: return "initial_summary";
    case TemplateId::kRefineWithFeedback: return "refine_with_feedback";
    case TemplateId::kRefineWithoutFeedback: return "refine_without_feedback";
    case TemplateId::kWordRemoval: return "word_removal";
    case TemplateId::kInstructRm1: return "instructrm_1";
    case TemplateId::kInstructRm2: return "instructrm_2";
    case TemplateId::kInstructRm3: return "instructrm_3";
    case TemplateId::kInstructRm4: return "instructrm_4";
    case TemplateId::kInstructRm5: return "instructrm_5";
    case TemplateId::kFinetuneFeedbackPrompt: return "finetune_feedback_prompt";
    case TemplateId::kFinetuneFeedbackCompletion:
      return "finetune_feedback_completion";
    case TemplateId::kBinaryRm: return "binary_rm";
    case TemplateId::kComparisonRm: return "comparison_rm";
  }
  return "unknown";
}

TemplateId ParseTemplateName(std::string_view name) {
  for (TemplateId id : kAllTemplateIds) {
    if (TemplateName(id) == name) return id;
  }
  Fail(ErrorKind::kValidation, "unknown template '" + std::string(name) + "'");
}

TemplateId InstructRmTemplate(int prompt_index) {
  switch (prompt_index) {
    case 1: return TemplateId::kInstructRm1;
    case 2: return TemplateId::kInstructRm2;
    case 3: return TemplateId::kInstructRm3;
    case 4: return TemplateId::kInstructRm4;
    case 5: return TemplateId::kInstructRm5;
  }
  Fail(ErrorKind::kPrecondition,
       "InstructRM prompt index must be in 1..5, got " +
           std::to_string(prompt_index));
}

const std::string& DefaultTemplateBody(TemplateId id) {
  static const std::vector<std::string> bodies = [] {
    std::vector<std::string> out;
    for (TemplateId each : kAllTemplateIds) out.push_back(BuildDefault(each));
    return out;
  }();
  return bodies.at(static_cast<size_t>(id));
}

PromptTemplate::PromptTemplate(TemplateId id, std::string body)
    : id_(id), body_(std::move(body)), placeholders_(ScanPlaceholders(body_)) {}

std::string PromptTemplate::Render(const TemplateValues& values) const {
  std::string out;
  out.reserve(body_.size() * 2);
  size_t pos = 0;
  while (true) {
    const size_t open = body_.find('{', pos);
    if (open == std::string::npos) {
      out.append(body_, pos, std::string::npos);
      break;
    }
    out.append(body_, pos, open - pos);
    const size_t close = body_.find('}', open + 1);
    const std::string_view name(body_.data() + open + 1, close - open - 1);
    auto it = values.find(name);
    if (it == values.end() || it->second.empty()) {
      throw TemplateError(std::string(name));
    }
    out += it->second;
    pos = close + 1;
  }
  return out;
}

TemplateSet::TemplateSet() {
  for (TemplateId id : kAllTemplateIds) {
    templates_.emplace_back(id, DefaultTemplateBody(id));
  }
}

TemplateSet TemplateSet::Load(const std::filesystem::path& dir) {
  TemplateSet set;
  if (dir.empty()) return set;
  if (!std::filesystem::is_directory(dir)) {
    Fail(ErrorKind::kIo, "templates_dir " + dir.string() + " is not a directory");
  }
  for (TemplateId id : kAllTemplateIds) {
    const auto path = dir / (std::string(TemplateName(id)) + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::string body = ReadTextFile(path);
    // Asset files end with a single newline that is not part of the prompt.
    if (!body.empty() && body.back() == '\n') body.pop_back();
    set.Override(id, std::move(body));
  }
  return set;
}

const PromptTemplate& TemplateSet::Get(TemplateId id) const {
  return templates_.at(static_cast<size_t>(id));
}

void TemplateSet::Override(TemplateId id, std::string body) {
  PromptTemplate candidate(id, std::move(body));
  std::vector<std::string> want = Get(id).placeholders();
  std::vector<std::string> have = candidate.placeholders();
  std::sort(want.begin(), want.end());
  std::sort(have.begin(), have.end());
  for (const std::string& name : want) {
    if (!std::binary_search(have.begin(), have.end(), name)) {
      throw TemplateError(name, "required by " +
                                    std::string(TemplateName(id)) +
                                    " but absent from override");
    }
  }
  for (const std::string& name : have) {
    if (!std::binary_search(want.begin(), want.end(), name)) {
      throw TemplateError(name, "unknown placeholder in override of " +
                                    std::string(TemplateName(id)));
    }
  }
  templates_[static_cast<size_t>(id)] = std::move(candidate);
}

TemplateValues SampleValues(const Sample& sample) {
  TemplateValues values;
  values["title"] = sample.title;
  values["text"] = sample.post;
  values["summary"] = sample.initial_output;
  values["feedback"] = sample.feedback;
  const std::vector<std::string> words = SplitWhitespace(sample.post);
  if (words.size() >= 2) values["stem"] = words[0] + " " + words[1];
  return values;
}

std::string RenderPrompt(const PromptTemplate& tmpl, const Sample& sample,
                         const TemplateValues& extra) {
  TemplateValues values = SampleValues(sample);
  for (const auto& [key, value] : extra) values[key] = value;
  return tmpl.Render(values);
}

}  // namespace ilf
