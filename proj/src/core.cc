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

#include "ilf/core.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "ilf/error.h"

namespace ilf {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kTemplate: return "template";
    case ErrorKind::kBackend: return "backend";
    case ErrorKind::kCapability: return "capability";
    case ErrorKind::kFixtureMiss: return "fixture-miss";
    case ErrorKind::kDegenerateProbe: return "degenerate-probe";
    case ErrorKind::kUndefinedSimilarity: return "undefined-similarity";
    case ErrorKind::kSelection: return "selection";
    case ErrorKind::kEnsemble: return "ensemble";
    case ErrorKind::kLookup: return "lookup";
    case ErrorKind::kFinetune: return "finetune";
    case ErrorKind::kResumableAbort: return "resumable-abort";
  }
  return "unknown";
}

bool Error::is_validation() const {
  switch (kind_) {
    case ErrorKind::kPrecondition:
    case ErrorKind::kValidation:
    case ErrorKind::kParse:
    case ErrorKind::kTemplate:
    case ErrorKind::kLookup:
      return true;
    default:
      return false;
  }
}

uint64_t StableHash(std::string_view text) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t MixSeed(uint64_t seed, uint64_t value) {
  return SplitMix64(SplitMix64(seed) ^ value);
}

uint64_t MixSeed(uint64_t seed, std::string_view purpose) {
  return MixSeed(seed, StableHash(purpose));
}

std::mt19937_64 MakeStream(uint64_t seed, std::string_view purpose) {
  return std::mt19937_64(MixSeed(seed, purpose));
}

std::string HexDigest(std::string_view text) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << StableHash(text);
  return out.str();
}

std::string_view ToString(FeedbackCategory category) {
  switch (category) {
    case FeedbackCategory::kCoverage: return "coverage";
    case FeedbackCategory::kAccuracy: return "accuracy";
    case FeedbackCategory::kCoherence: return "coherence";
    case FeedbackCategory::kOther: return "other";
  }
  return "other";
}

FeedbackCategory ParseFeedbackCategory(std::string_view name) {
  if (name == "coverage") return FeedbackCategory::kCoverage;
  if (name == "accuracy") return FeedbackCategory::kAccuracy;
  if (name == "coherence") return FeedbackCategory::kCoherence;
  if (name == "other") return FeedbackCategory::kOther;
  Fail(ErrorKind::kValidation,
       "unknown feedback category '" + std::string(name) + "'");
}

std::string_view ToString(FinetuneMode mode) {
  switch (mode) {
    case FinetuneMode::kContinuous: return "continuous";
    case FinetuneMode::kFromScratchConcat: return "from_scratch_concat";
    case FinetuneMode::kEmitOnly: return "emit_only";
  }
  return "continuous";
}

FinetuneMode ParseFinetuneMode(std::string_view name) {
  if (name == "continuous") return FinetuneMode::kContinuous;
  if (name == "from_scratch_concat") return FinetuneMode::kFromScratchConcat;
  if (name == "emit_only") return FinetuneMode::kEmitOnly;
  Fail(ErrorKind::kValidation,
       "unknown finetune mode '" + std::string(name) + "'");
}

Beta Beta::Finite(double value) {
  if (!std::isfinite(value)) {
    Fail(ErrorKind::kValidation, "beta must be finite or \"infinity\"");
  }
  return Beta(false, value);
}

Beta Beta::Parse(std::string_view text) {
  if (text == "infinity" || text == "inf" || text == "Infinity") {
    return Infinity();
  }
  try {
    size_t used = 0;
    double value = std::stod(std::string(text), &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return Finite(value);
  } catch (const std::logic_error&) {
    Fail(ErrorKind::kValidation, "invalid beta '" + std::string(text) + "'");
  }
}

std::string Beta::ToString() const {
  if (infinite_) return "infinity";
  std::ostringstream out;
  out << value_;
  return out.str();
}

const std::string& RefinementSet::selected() const {
  if (selected_index < 0 ||
      static_cast<size_t>(selected_index) >= candidates.size()) {
    Fail(ErrorKind::kSelection,
         "refinement set '" + sample_id + "' has no selected candidate");
  }
  return candidates[selected_index];
}

void RefinementSet::Validate() const {
  const std::string where = "refinement set '" + sample_id + "': ";
  if (candidates.empty()) {
    Fail(ErrorKind::kValidation, where + "needs at least one candidate");
  }
  if (!scored()) return;
  if (scores.size() != candidates.size() ||
      weights.size() != candidates.size()) {
    Fail(ErrorKind::kValidation,
         where + "candidates, scores and weights differ in length");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) {
      Fail(ErrorKind::kValidation, where + "weight outside [0, 1]");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    Fail(ErrorKind::kValidation, where + "weights do not sum to 1");
  }
  if (selected_index < 0 ||
      static_cast<size_t>(selected_index) >= candidates.size()) {
    Fail(ErrorKind::kValidation, where + "selected_index out of range");
  }
  // Lowest index among the maxima.
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  if (static_cast<size_t>(selected_index) != best) {
    Fail(ErrorKind::kValidation, where + "selected_index is not the argmax");
  }
}

void FinetuneRecord::Validate() const {
  if (prompt.empty() || completion.empty()) {
    Fail(ErrorKind::kValidation,
         "finetune record needs a non-empty prompt and completion");
  }
  if (!(weight > 0.0 && weight <= 1.0)) {
    Fail(ErrorKind::kValidation, "finetune record weight outside (0, 1]");
  }
}

// ---------------------------------------------------------------------------

namespace {

const Json& Field(const Json& json, const char* name) {
  if (!json.is_object()) {
    Fail(ErrorKind::kValidation, "expected a JSON object");
  }
  auto it = json.find(name);
  if (it == json.end()) {
    Fail(ErrorKind::kValidation, std::string("missing field \"") + name + "\"");
  }
  return *it;
}

std::string StringField(const Json& json, const char* name) {
  const Json& value = Field(json, name);
  if (!value.is_string()) {
    Fail(ErrorKind::kValidation,
         std::string("field \"") + name + "\" must be a string");
  }
  return value.get<std::string>();
}

double FloorWeight(double w) { return std::abs(w) < kWeightFloor ? 0.0 : w; }

template <typename T>
T ValueOr(const Json& json, const char* name, T fallback) {
  auto it = json.find(name);
  if (it == json.end() || it->is_null()) return fallback;
  return it->get<T>();
}

}  // namespace

Json ToJson(const Sample& sample) {
  Json json;
  json["id"] = sample.id;
  json["title"] = sample.title;
  json["post"] = sample.post;
  json["initial_output"] = sample.initial_output;
  json["feedback"] = sample.feedback;
  json["feedback_category"] = ToString(sample.feedback_category);
  if (sample.ideal_output) json["ideal_output"] = *sample.ideal_output;
  if (sample.comparison) {
    json["comparison"] = {
        {"output_a", sample.comparison->output_a},
        {"output_b", sample.comparison->output_b},
        {"preferred",
         sample.comparison->preferred == Preferred::kA ? "A" : "B"}};
  }
  return json;
}

Sample SampleFromJson(const Json& json) {
  Sample sample;
  sample.id = StringField(json, "id");
  if (sample.id.empty()) Fail(ErrorKind::kValidation, "empty sample id");
  sample.title = StringField(json, "title");
  sample.post = StringField(json, "post");
  sample.initial_output = StringField(json, "initial_output");
  sample.feedback = StringField(json, "feedback");
  if (auto it = json.find("feedback_category"); it != json.end()) {
    sample.feedback_category =
        ParseFeedbackCategory(it->get<std::string>());
  }
  if (auto it = json.find("ideal_output");
      it != json.end() && !it->is_null()) {
    sample.ideal_output = it->get<std::string>();
  }
  if (auto it = json.find("comparison"); it != json.end() && !it->is_null()) {
    Comparison comparison;
    comparison.output_a = StringField(*it, "output_a");
    comparison.output_b = StringField(*it, "output_b");
    const std::string preferred = StringField(*it, "preferred");
    if (preferred == "A") {
      comparison.preferred = Preferred::kA;
    } else if (preferred == "B") {
      comparison.preferred = Preferred::kB;
    } else {
      Fail(ErrorKind::kValidation, "comparison.preferred must be \"A\" or \"B\"");
    }
    sample.comparison = std::move(comparison);
  }
  return sample;
}

Json ToJson(const RefinementSet& set) {
  Json json;
  json["sample_id"] = set.sample_id;
  json["candidates"] = set.candidates;
  json["scores"] = set.scores;
  Json weights = Json::array();
  for (double w : set.weights) weights.push_back(FloorWeight(w));
  json["weights"] = std::move(weights);
  json["selected_index"] = set.selected_index;
  return json;
}

RefinementSet RefinementSetFromJson(const Json& json) {
  RefinementSet set;
  set.sample_id = StringField(json, "sample_id");
  set.candidates = Field(json, "candidates").get<std::vector<std::string>>();
  set.scores = ValueOr<std::vector<double>>(json, "scores", {});
  set.weights = ValueOr<std::vector<double>>(json, "weights", {});
  set.selected_index = ValueOr<int>(json, "selected_index", -1);
  set.Validate();
  return set;
}

Json ToJson(const FinetuneRecord& record) {
  Json json;
  json["prompt"] = record.prompt;
  json["completion"] = record.completion;
  json["weight"] = FloorWeight(record.weight);
  return json;
}

FinetuneRecord FinetuneRecordFromJson(const Json& json) {
  FinetuneRecord record;
  record.prompt = StringField(json, "prompt");
  record.completion = StringField(json, "completion");
  record.weight = ValueOr<double>(json, "weight", 1.0);
  record.Validate();
  return record;
}

// ---------------------------------------------------------------------------

BackendSpec BackendSpec::FromJson(const Json& json) {
  BackendSpec spec;
  spec.kind = ValueOr<std::string>(json, "kind", spec.kind);
  spec.model_id = ValueOr<std::string>(json, "model", spec.kind);
  spec.corruption = ValueOr<double>(json, "corruption", spec.corruption);
  spec.seed = ValueOr<uint64_t>(json, "seed", spec.seed);
  spec.fixtures_dir = ValueOr<std::string>(json, "fixtures_dir", "");
  spec.base_url = ValueOr<std::string>(json, "base_url", "");
  spec.api_key_env = ValueOr<std::string>(json, "api_key_env", "");
  spec.timeout_ms = ValueOr<int>(json, "timeout_ms", spec.timeout_ms);
  spec.max_in_flight = ValueOr<int>(json, "max_in_flight", spec.max_in_flight);
  spec.max_retries = ValueOr<int>(json, "max_retries", spec.max_retries);
  spec.bos_cue = ValueOr<std::string>(json, "bos_cue", "");
  if (auto it = json.find("tokens"); it != json.end()) {
    for (const auto& [token, p] : it->items()) {
      spec.tokens.emplace_back(token, p.get<double>());
    }
  }
  if (spec.max_in_flight < 1 || spec.max_retries < 1 || spec.timeout_ms < 1) {
    Fail(ErrorKind::kValidation,
         "backend max_in_flight, max_retries and timeout_ms must be >= 1");
  }
  if (spec.corruption < 0.0 || spec.corruption > 1.0) {
    Fail(ErrorKind::kValidation, "backend corruption must be in [0, 1]");
  }
  return spec;
}

Json BackendSpec::ToJson() const {
  Json json;
  json["kind"] = kind;
  json["model"] = model_id;
  if (kind == "rule_mock") {
    json["corruption"] = corruption;
    json["seed"] = seed;
  } else if (kind == "scripted") {
    json["fixtures_dir"] = fixtures_dir;
  } else if (kind == "http") {
    json["base_url"] = base_url;
    json["api_key_env"] = api_key_env;
    json["timeout_ms"] = timeout_ms;
    json["max_in_flight"] = max_in_flight;
    json["max_retries"] = max_retries;
    json["bos_cue"] = bos_cue;
  } else if (kind == "categorical") {
    Json tokens_json = Json::object();
    for (const auto& [token, p] : tokens) tokens_json[token] = p;
    json["tokens"] = std::move(tokens_json);
  }
  return json;
}

ScorerSpec ScorerSpec::FromJson(const Json& json) {
  ScorerSpec spec;
  spec.kind = ValueOr<std::string>(json, "kind", spec.kind);
  spec.prompt_index = ValueOr<int>(json, "prompt_index", spec.prompt_index);
  spec.embedding_base_url = ValueOr<std::string>(json, "embedding_base_url", "");
  spec.embedding_model = ValueOr<std::string>(json, "embedding_model", "");
  spec.embedding_dim = ValueOr<int>(json, "embedding_dim", spec.embedding_dim);
  return spec;
}

Json ScorerSpec::ToJson() const {
  Json json;
  json["kind"] = kind;
  if (kind == "instructrm_single") json["prompt_index"] = prompt_index;
  if (kind == "embedding_similarity") {
    json["embedding_base_url"] = embedding_base_url;
    json["embedding_model"] = embedding_model;
    json["embedding_dim"] = embedding_dim;
  }
  return json;
}

void RunConfig::Validate() const {
  if (n < 1) Fail(ErrorKind::kValidation, "n must be >= 1");
  if (iterations < 1) Fail(ErrorKind::kValidation, "iterations must be >= 1");
  if (lambda < 0.0 || lambda > 1.0) {
    Fail(ErrorKind::kValidation, "lambda must be in [0, 1]");
  }
  if (sampling.max_tokens < 1) {
    Fail(ErrorKind::kValidation, "sampling.max_tokens must be >= 1");
  }
  if (!(sampling.top_p > 0.0 && sampling.top_p <= 1.0)) {
    Fail(ErrorKind::kValidation, "sampling.top_p must be in (0, 1]");
  }
  if (sampling.temperature < 0.0) {
    Fail(ErrorKind::kValidation, "sampling.temperature must be >= 0");
  }
  if (max_parallel < 1) Fail(ErrorKind::kValidation, "max_parallel must be >= 1");
}

RunConfig RunConfig::FromJson(const Json& json) {
  if (!json.is_object()) Fail(ErrorKind::kValidation, "config must be an object");
  RunConfig config;
  if (auto it = json.find("backend"); it != json.end()) {
    config.backend = BackendSpec::FromJson(*it);
  }
  if (auto it = json.find("refinement_backend"); it != json.end()) {
    config.refinement_backend = BackendSpec::FromJson(*it);
  }
  if (auto it = json.find("finetune_backend"); it != json.end()) {
    config.finetune_backend = BackendSpec::FromJson(*it);
  }
  if (auto it = json.find("scorer"); it != json.end()) {
    config.scorer = ScorerSpec::FromJson(*it);
  }
  config.n = ValueOr<int>(json, "n", config.n);
  if (auto it = json.find("beta"); it != json.end()) {
    config.beta = it->is_string() ? Beta::Parse(it->get<std::string>())
                                  : Beta::Finite(it->get<double>());
  }
  config.iterations = ValueOr<int>(json, "iterations", config.iterations);
  config.lambda = ValueOr<double>(json, "lambda", config.lambda);
  if (auto it = json.find("sampling"); it != json.end()) {
    config.sampling.top_p = ValueOr<double>(*it, "top_p", 0.95);
    config.sampling.temperature = ValueOr<double>(*it, "temperature", 1.0);
    config.sampling.max_tokens = ValueOr<int>(*it, "max_tokens", 48);
  }
  config.seed = ValueOr<uint64_t>(json, "seed", config.seed);
  if (auto it = json.find("finetune_mode"); it != json.end()) {
    config.finetune_mode = ParseFinetuneMode(it->get<std::string>());
  }
  config.templates_dir = ValueOr<std::string>(json, "templates_dir", "");
  config.max_parallel = ValueOr<int>(json, "max_parallel", config.max_parallel);
  if (auto it = json.find("serve"); it != json.end()) {
    config.serve.port = ValueOr<int>(*it, "port", config.serve.port);
    config.serve.token_env =
        ValueOr<std::string>(*it, "token_env", config.serve.token_env);
    config.serve.lease_minutes =
        ValueOr<double>(*it, "lease_minutes", config.serve.lease_minutes);
  }
  config.Validate();
  return config;
}

RunConfig RunConfig::Load(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  Json json;
  try {
    json = Json::parse(text);
  } catch (const Json::exception& e) {
    Fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  try {
    return FromJson(json);
  } catch (const Json::exception& e) {
    Fail(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
}

Json RunConfig::ToJson() const {
  Json json;
  json["backend"] = backend.ToJson();
  if (refinement_backend) json["refinement_backend"] = refinement_backend->ToJson();
  json["finetune_backend"] = finetune_backend.ToJson();
  json["scorer"] = scorer.ToJson();
  json["n"] = n;
  if (beta.is_infinite()) {
    json["beta"] = "infinity";
  } else {
    json["beta"] = beta.value();
  }
  json["iterations"] = iterations;
  json["lambda"] = lambda;
  json["sampling"] = {{"top_p", sampling.top_p},
                      {"temperature", sampling.temperature},
                      {"max_tokens", sampling.max_tokens}};
  json["seed"] = seed;
  json["finetune_mode"] = ToString(finetune_mode);
  json["templates_dir"] = templates_dir;
  json["max_parallel"] = max_parallel;
  json["serve"] = {{"port", serve.port},
                   {"token_env", serve.token_env},
                   {"lease_minutes", serve.lease_minutes}};
  return json;
}

// ---------------------------------------------------------------------------

std::vector<Json> ReadJsonLines(std::istream& in) {
  std::vector<Json> rows;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw ParseError(line_number, e.what());
    }
  }
  return rows;
}

std::vector<Json> ReadJsonLines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  return ReadJsonLines(in);
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path.string());
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteJsonLines(const std::filesystem::path& path,
                    std::span<const Json> rows) {
  std::string text;
  for (const Json& row : rows) {
    text += row.dump();
    text += '\n';
  }
  WriteTextFile(path, text);
}

namespace {

template <typename T, typename Convert>
std::vector<T> ParseRows(std::istream& in, Convert convert) {
  std::vector<T> out;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(convert(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError(line_number, e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_number, e.what());
    }
  }
  return out;
}

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<Sample> LoadSamples(std::istream& in) {
  std::vector<Sample> samples = ParseRows<Sample>(in, SampleFromJson);
  std::unordered_set<std::string> seen;
  for (const Sample& sample : samples) {
    if (!seen.insert(sample.id).second) {
      Fail(ErrorKind::kValidation, "duplicate sample id '" + sample.id + "'");
    }
  }
  return samples;
}

std::vector<Sample> LoadSamples(const std::filesystem::path& path) {
  auto in = OpenForRead(path);
  return LoadSamples(in);
}

void WriteSamples(std::span<const Sample> samples,
                  const std::filesystem::path& path) {
  std::vector<Json> rows;
  rows.reserve(samples.size());
  for (const Sample& sample : samples) rows.push_back(ToJson(sample));
  WriteJsonLines(path, rows);
}

std::vector<FinetuneRecord> LoadFinetuneDataset(
    const std::filesystem::path& path) {
  auto in = OpenForRead(path);
  return ParseRows<FinetuneRecord>(in, FinetuneRecordFromJson);
}

void WriteFinetuneDataset(std::span<const FinetuneRecord> records,
                          const std::filesystem::path& path) {
  std::vector<Json> rows;
  rows.reserve(records.size());
  for (const FinetuneRecord& record : records) {
    record.Validate();
    rows.push_back(ToJson(record));
  }
  WriteJsonLines(path, rows);
}

std::vector<RefinementSet> LoadRefinements(const std::filesystem::path& path) {
  auto in = OpenForRead(path);
  return ParseRows<RefinementSet>(in, RefinementSetFromJson);
}

void WriteRefinements(std::span<const RefinementSet> sets,
                      const std::filesystem::path& path) {
  std::vector<Json> rows;
  rows.reserve(sets.size());
  for (const RefinementSet& set : sets) rows.push_back(ToJson(set));
  WriteJsonLines(path, rows);
}

}  // namespace ilf
