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

#include "ilf/wordremoval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "ilf/error.h"
#include "ilf/templates.h"
#include "ilf/text.h"

namespace ilf {

namespace {

constexpr std::string_view kPromptHead =
    "In this text, many toxic and offensive words are used: ";
constexpr std::string_view kInstructionHead = "The ideal text should remove the ";
constexpr std::string_view kInstructionTail = ", but otherwise be unchanged";
constexpr std::string_view kItemSeparator = ", and ";
constexpr std::string_view kNicePerson = "nice person";
constexpr int kMaxK = 10;
constexpr int kMaxL = 3;

// Uniform integer in [0, n) by rejection, identical on every standard library.
size_t UniformIndex(std::mt19937_64& rng, size_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<size_t>(draw % n);
}

// First `count` entries of a seeded Fisher-Yates shuffle of [0, n).
std::vector<size_t> DrawWithoutReplacement(std::mt19937_64& rng, size_t n,
                                           size_t count) {
  std::vector<size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (size_t i = 0; i < count; ++i) {
    const size_t j = i + UniformIndex(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

std::string JoinWords(std::span<const std::string> words) {
  if (words.size() == 1) return words[0];
  if (words.size() == 2) return words[0] + " and " + words[1];
  std::string out;
  for (size_t i = 0; i + 1 < words.size(); ++i) out += words[i] + ", ";
  out += "and " + words.back();
  return out;
}

std::vector<std::string> SplitWords(std::string_view list) {
  // Inverse of JoinWords.
  std::vector<std::string> words;
  if (const size_t comma = list.find(", "); comma != std::string_view::npos) {
    size_t pos = 0;
    while (true) {
      const size_t next = list.find(", ", pos);
      std::string_view piece = list.substr(
          pos, next == std::string_view::npos ? std::string_view::npos
                                              : next - pos);
      if (piece.starts_with("and ")) piece.remove_prefix(4);
      words.emplace_back(piece);
      if (next == std::string_view::npos) break;
      pos = next + 2;
    }
    return words;
  }
  if (const size_t pos = list.find(" and "); pos != std::string_view::npos) {
    words.emplace_back(list.substr(0, pos));
    words.emplace_back(list.substr(pos + 5));
    return words;
  }
  words.emplace_back(list);
  return words;
}

}  // namespace

std::string Article(std::string_view noun) {
  if (noun.empty()) return "a";
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(noun[0])));
  return (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') ? "an" : "a";
}

std::string BuildSentence(std::span<const std::string> nouns) {
  std::string sentence = "You are such ";
  for (size_t i = 0; i < nouns.size(); ++i) {
    if (i > 0) sentence += kItemSeparator;
    sentence += Article(nouns[i]) + " " + nouns[i];
  }
  sentence += ".";
  return sentence;
}

RemovalSentence ParseSentence(std::string_view sentence) {
  const std::vector<std::string> words = SplitWhitespace(sentence);
  if (words.size() < 4) {
    Fail(ErrorKind::kValidation, "removal sentence too short: '" +
                                     std::string(sentence) + "'");
  }
  RemovalSentence parsed;
  parsed.stem = words[0] + " " + words[1];
  std::string_view rest = sentence.substr(parsed.stem.size());
  if (!sentence.starts_with(parsed.stem) || !rest.starts_with(" such ") ||
      !rest.ends_with(".")) {
    Fail(ErrorKind::kValidation, "removal sentence does not follow the "
                                 "'<stem> such a X, and a Y.' grammar: '" +
                                     std::string(sentence) + "'");
  }
  rest.remove_prefix(6);
  rest.remove_suffix(1);
  size_t pos = 0;
  while (true) {
    const size_t next = rest.find(kItemSeparator, pos);
    parsed.items.emplace_back(rest.substr(
        pos, next == std::string_view::npos ? std::string_view::npos
                                            : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + kItemSeparator.size();
  }
  return parsed;
}

std::string ItemNoun(std::string_view item) {
  const size_t space = item.find(' ');
  if (space == std::string_view::npos) return std::string(item);
  return std::string(item.substr(space + 1));
}

std::string RemovalTarget(std::string_view sentence,
                          std::span<const std::string> remove_words) {
  const RemovalSentence parsed = ParseSentence(sentence);
  std::vector<std::string> kept;
  for (const std::string& item : parsed.items) {
    const std::string noun = ItemNoun(item);
    if (std::find(remove_words.begin(), remove_words.end(), noun) ==
        remove_words.end()) {
      kept.push_back(item);
    }
  }
  std::string target = " such ";
  for (size_t i = 0; i < kept.size(); ++i) {
    if (i > 0) target += " and ";
    target += kept[i];
  }
  target += ".";
  return target;
}

std::string RemovalInstruction(std::span<const std::string> remove_words) {
  Require(!remove_words.empty(), "removal instruction needs at least one word");
  std::string out(kInstructionHead);
  out += remove_words.size() == 1 ? "word " : "words ";
  out += JoinWords(remove_words);
  out += kInstructionTail;
  return out;
}

Sample RemovalSample(const RemovalTask& task) {
  Sample sample;
  sample.id = task.id;
  sample.post = task.sentence;
  sample.feedback = RemovalInstruction(task.remove_words);
  return sample;
}

std::string BuildRemovalPrompt(const RemovalTask& task) {
  static const PromptTemplate tmpl(TemplateId::kWordRemoval,
                                   DefaultTemplateBody(TemplateId::kWordRemoval));
  return RenderPrompt(tmpl, RemovalSample(task), {{"stem", task.stem}});
}

std::optional<ParsedRemovalPrompt> ParseRemovalPrompt(std::string_view prompt) {
  if (!prompt.starts_with(kPromptHead)) return std::nullopt;
  prompt.remove_prefix(kPromptHead.size());
  const size_t head = prompt.find(std::string(" ") + std::string(kInstructionHead));
  if (head == std::string_view::npos) return std::nullopt;
  ParsedRemovalPrompt parsed;
  parsed.sentence = std::string(prompt.substr(0, head));
  prompt.remove_prefix(head + 1 + kInstructionHead.size());
  if (prompt.starts_with("words ")) {
    prompt.remove_prefix(6);
  } else if (prompt.starts_with("word ")) {
    prompt.remove_prefix(5);
  } else {
    return std::nullopt;
  }
  const std::string tail = std::string(kInstructionTail) + ": ";
  const size_t end = prompt.find(tail);
  if (end == std::string_view::npos) return std::nullopt;
  parsed.remove_words = SplitWords(prompt.substr(0, end));
  parsed.stem = std::string(prompt.substr(end + tail.size()));
  return parsed;
}

void RemovalTask::Validate() const {
  const std::string where = "removal task '" + id + "': ";
  const RemovalSentence parsed = ParseSentence(sentence);
  if (k < 1 || k > kMaxK || parsed.items.size() != static_cast<size_t>(k) + 1) {
    Fail(ErrorKind::kValidation, where + "k does not match the sentence");
  }
  if (remove_words.empty() || remove_words.size() > kMaxL ||
      remove_words.size() > static_cast<size_t>(k)) {
    Fail(ErrorKind::kValidation, where + "needs 1 <= l <= min(3, k) words");
  }
  for (const std::string& word : remove_words) {
    const auto count = std::count_if(
        parsed.items.begin(), parsed.items.end(),
        [&](const std::string& item) { return ItemNoun(item) == word; });
    if (count != 1) {
      Fail(ErrorKind::kValidation,
           where + "word '" + word + "' must occur exactly once");
    }
  }
  if (target.find(kNicePerson) == std::string::npos) {
    Fail(ErrorKind::kValidation, where + "target lost \"nice person\"");
  }
  if (stem != parsed.stem) Fail(ErrorKind::kValidation, where + "bad stem");
}

Json ToJson(const RemovalTask& task) {
  Json json;
  json["id"] = task.id;
  json["sentence"] = task.sentence;
  json["k"] = task.k;
  json["remove_words"] = task.remove_words;
  json["target"] = task.target;
  json["stem"] = task.stem;
  return json;
}

RemovalTask RemovalTaskFromJson(const Json& json) {
  RemovalTask task;
  task.id = json.at("id").get<std::string>();
  task.sentence = json.at("sentence").get<std::string>();
  task.k = json.at("k").get<int>();
  task.remove_words = json.at("remove_words").get<std::vector<std::string>>();
  task.target = json.at("target").get<std::string>();
  task.stem = json.at("stem").get<std::string>();
  task.Validate();
  return task;
}

std::vector<RemovalTask> LoadTasks(std::istream& in) {
  std::vector<RemovalTask> tasks;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (Trim(line).empty()) continue;
    try {
      tasks.push_back(RemovalTaskFromJson(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError(line_number, e.what());
    } catch (const Error& e) {
      throw ParseError(line_number, e.what());
    }
  }
  return tasks;
}

std::vector<RemovalTask> LoadTasks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  return LoadTasks(in);
}

void WriteTasks(std::span<const RemovalTask> tasks,
                const std::filesystem::path& path) {
  std::vector<Json> rows;
  for (const RemovalTask& task : tasks) rows.push_back(ToJson(task));
  WriteJsonLines(path, rows);
}

std::vector<std::string> DefaultWordList() {
  std::vector<std::string> words;
  for (int i = 1; i <= 25; ++i) {
    words.push_back(std::string("badword") + (i < 10 ? "0" : "") +
                    std::to_string(i));
  }
  return words;
}

std::vector<std::string> LoadWordList(const std::filesystem::path& path) {
  std::vector<std::string> words;
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view word = Trim(line);
    if (!word.empty()) words.emplace_back(word);
  }
  return words;
}

std::vector<RemovalTask> GenerateTaskSet(uint64_t seed,
                                         std::span<const std::string> word_list,
                                         int sentences_per_k) {
  Require(sentences_per_k >= 1, "sentences_per_k must be >= 1");
  std::set<std::string> distinct(word_list.begin(), word_list.end());
  if (distinct.size() != word_list.size()) {
    Fail(ErrorKind::kValidation, "word list contains duplicates");
  }
  Require(word_list.size() >= static_cast<size_t>(kMaxK),
          "word list needs at least 10 distinct words");
  for (const std::string& word : word_list) {
    if (word.empty() || word.find_first_of(" ,.\t\n") != std::string::npos ||
        word == kNicePerson) {
      Fail(ErrorKind::kValidation, "word list entry '" + word +
                                       "' must be a single bare word");
    }
  }

  std::mt19937_64 rng = MakeStream(seed, "wordgen");
  std::vector<RemovalTask> tasks;
  tasks.reserve(static_cast<size_t>(sentences_per_k) * 27);
  for (int k = 1; k <= kMaxK; ++k) {
    for (int s = 0; s < sentences_per_k; ++s) {
      std::vector<std::string> nouns;
      for (size_t index : DrawWithoutReplacement(rng, word_list.size(), k)) {
        nouns.push_back(word_list[index]);
      }
      std::vector<std::string> with_nice = nouns;
      with_nice.emplace_back(kNicePerson);
      const std::string sentence = BuildSentence(with_nice);
      for (int l = 1; l <= std::min(kMaxL, k); ++l) {
        std::vector<size_t> picks = DrawWithoutReplacement(rng, k, l);
        std::sort(picks.begin(), picks.end());
        RemovalTask task;
        task.id = "k" + std::to_string(k) + "-s" + std::to_string(s) + "-l" +
                  std::to_string(l);
        task.sentence = sentence;
        task.k = k;
        for (size_t p : picks) task.remove_words.push_back(nouns[p]);
        task.target = RemovalTarget(sentence, task.remove_words);
        task.stem = ParseSentence(sentence).stem;
        tasks.push_back(std::move(task));
      }
    }
  }
  return tasks;
}

MatchStats ProportionStats(size_t successes, size_t n) {
  Require(n > 0, "proportion needs n > 0");
  MatchStats stats;
  stats.n = n;
  stats.accuracy = static_cast<double>(successes) / static_cast<double>(n);
  stats.se = std::sqrt(stats.accuracy * (1.0 - stats.accuracy) /
                       static_cast<double>(n));
  return stats;
}

ExactMatchReport EvaluateExactMatch(std::span<const std::string> predictions,
                                    std::span<const RemovalTask> tasks) {
  Require(!tasks.empty(), "exact-match evaluation needs at least one task");
  Require(predictions.size() == tasks.size(),
          "exact-match evaluation needs one prediction per task (" +
              std::to_string(predictions.size()) + " vs " +
              std::to_string(tasks.size()) + ")");
  ExactMatchReport report;
  std::map<int, std::pair<size_t, size_t>> per_l;  // l -> (hits, total)
  size_t hits = 0;
  for (size_t i = 0; i < tasks.size(); ++i) {
    const bool match = Trim(predictions[i]) == Trim(tasks[i].target);
    report.matches.push_back(match);
    hits += match;
    auto& bucket = per_l[static_cast<int>(tasks[i].remove_words.size())];
    bucket.first += match;
    bucket.second += 1;
  }
  report.overall = ProportionStats(hits, tasks.size());
  for (const auto& [l, bucket] : per_l) {
    report.per_l[l] = ProportionStats(bucket.first, bucket.second);
  }
  return report;
}

std::vector<std::string> CorruptPredictions(
    std::span<const std::string> predictions, double success_rate,
    uint64_t seed) {
  Require(success_rate >= 0.0 && success_rate <= 1.0,
          "success rate must be in [0, 1]");
  std::vector<std::string> out(predictions.begin(), predictions.end());
  const auto flips = static_cast<size_t>(
      std::llround((1.0 - success_rate) * static_cast<double>(out.size())));
  std::mt19937_64 rng = MakeStream(seed, "corrupt");
  for (size_t index : DrawWithoutReplacement(rng, out.size(), flips)) {
    out[index] += " [corrupted]";
  }
  return out;
}

}  // namespace ilf
