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

#ifndef ILF_CORE_H_
#define ILF_CORE_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ilf {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Seeding. Every random decision draws from a stream named by its purpose so
// adding a new consumer never perturbs an existing one.

// 64-bit FNV-1a; stable across platforms and releases.
uint64_t StableHash(std::string_view text);
uint64_t MixSeed(uint64_t seed, std::string_view purpose);
uint64_t MixSeed(uint64_t seed, uint64_t value);

std::mt19937_64 MakeStream(uint64_t seed, std::string_view purpose);

std::string HexDigest(std::string_view text);

// ---------------------------------------------------------------------------
// Domain types.

enum class FeedbackCategory { kCoverage, kAccuracy, kCoherence, kOther };

std::string_view ToString(FeedbackCategory category);
FeedbackCategory ParseFeedbackCategory(std::string_view name);

enum class Preferred { kA, kB };

struct Comparison {
  std::string output_a;
  std::string output_b;
  Preferred preferred = Preferred::kA;

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

// One context c with its initial output x0 and language feedback f.
struct Sample {
  std::string id;
  std::string title;
  std::string post;
  std::string initial_output;
  std::string feedback;
  FeedbackCategory feedback_category = FeedbackCategory::kOther;
  std::optional<std::string> ideal_output;
  std::optional<Comparison> comparison;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// N candidate refinements of one sample with their scores and weights.
struct RefinementSet {
  std::string sample_id;
  std::vector<std::string> candidates;
  std::vector<double> scores;
  std::vector<double> weights;
  int selected_index = -1;

  bool scored() const { return !scores.empty(); }
  const std::string& selected() const;
  // Checks size agreement, weight normalisation and the argmax rule.
  void Validate() const;

  friend bool operator==(const RefinementSet&, const RefinementSet&) = default;
};

struct FinetuneRecord {
  std::string prompt;
  std::string completion;
  double weight = 1.0;

  void Validate() const;

  friend bool operator==(const FinetuneRecord&,
                         const FinetuneRecord&) = default;
};

struct SamplingParams {
  double top_p = 0.95;
  double temperature = 1.0;
  int max_tokens = 48;
  uint64_t seed = 0;

  friend bool operator==(const SamplingParams&,
                         const SamplingParams&) = default;
};

// Inverse temperature of the importance weights. Infinity selects the argmax.
class Beta {
 public:
  static Beta Infinity() { return Beta(true, 0.0); }
  static Beta Finite(double value);
  static Beta Parse(std::string_view text);

  bool is_infinite() const { return infinite_; }
  double value() const { return value_; }
  std::string ToString() const;

  friend bool operator==(const Beta&, const Beta&) = default;

 private:
  Beta(bool infinite, double value) : infinite_(infinite), value_(value) {}
  bool infinite_;
  double value_;
};

enum class FinetuneMode { kContinuous, kFromScratchConcat, kEmitOnly };

std::string_view ToString(FinetuneMode mode);
FinetuneMode ParseFinetuneMode(std::string_view name);

// Which backend to build and how. Only the fields relevant to `kind` are read.
struct BackendSpec {
  std::string kind = "rule_mock";
  std::string model_id = "rule-mock";
  // rule_mock
  double corruption = 0.0;
  uint64_t seed = 0;
  // scripted
  std::string fixtures_dir;
  // http
  std::string base_url;
  std::string api_key_env;
  int timeout_ms = 30000;
  int max_in_flight = 4;
  int max_retries = 5;
  std::string bos_cue;
  // categorical: token -> probability
  std::vector<std::pair<std::string, double>> tokens;

  static BackendSpec FromJson(const Json& json);
  Json ToJson() const;
};

inline BackendSpec ImitationSpec() {
  BackendSpec spec;
  spec.kind = "imitation";
  spec.model_id = "imitation";
  return spec;
}

struct ScorerSpec {
  // instructrm_ensemble, instructrm_single, embedding_similarity, max_length,
  // random
  std::string kind = "instructrm_ensemble";
  int prompt_index = 1;
  // Remote embedder; empty base_url selects the hashing embedder.
  std::string embedding_base_url;
  std::string embedding_model;
  int embedding_dim = 256;

  static ScorerSpec FromJson(const Json& json);
  Json ToJson() const;
};

struct ServeConfig {
  int port = 8080;
  std::string token_env = "ILF_SERVE_TOKEN";
  double lease_minutes = 10.0;
};

struct RunConfig {
  BackendSpec backend;
  std::optional<BackendSpec> refinement_backend;
  BackendSpec finetune_backend = ImitationSpec();
  ScorerSpec scorer;
  int n = 5;
  Beta beta = Beta::Infinity();
  int iterations = 1;
  double lambda = 0.0;
  SamplingParams sampling;
  uint64_t seed = 0;
  FinetuneMode finetune_mode = FinetuneMode::kContinuous;
  std::string templates_dir;
  int max_parallel = 4;
  ServeConfig serve;

  void Validate() const;
  static RunConfig FromJson(const Json& json);
  static RunConfig Load(const std::filesystem::path& path);
  Json ToJson() const;
};

// ---------------------------------------------------------------------------
// Record (de)serialisation. Field names are snake_case and written in
// declaration order.

Json ToJson(const Sample& sample);
Sample SampleFromJson(const Json& json);
Json ToJson(const RefinementSet& set);
RefinementSet RefinementSetFromJson(const Json& json);
Json ToJson(const FinetuneRecord& record);
FinetuneRecord FinetuneRecordFromJson(const Json& json);

// Weights below this magnitude are serialised as exactly 0.
inline constexpr double kWeightFloor = 1e-12;

// ---------------------------------------------------------------------------
// JSONL I/O.

std::vector<Json> ReadJsonLines(const std::filesystem::path& path);
std::vector<Json> ReadJsonLines(std::istream& in);
void WriteJsonLines(const std::filesystem::path& path,
                    std::span<const Json> rows);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);
std::string ReadTextFile(const std::filesystem::path& path);

std::vector<Sample> LoadSamples(const std::filesystem::path& path);
std::vector<Sample> LoadSamples(std::istream& in);
void WriteSamples(std::span<const Sample> samples,
                  const std::filesystem::path& path);

std::vector<FinetuneRecord> LoadFinetuneDataset(
    const std::filesystem::path& path);
void WriteFinetuneDataset(std::span<const FinetuneRecord> records,
                          const std::filesystem::path& path);

std::vector<RefinementSet> LoadRefinements(const std::filesystem::path& path);
void WriteRefinements(std::span<const RefinementSet> sets,
                      const std::filesystem::path& path);

}  // namespace ilf

#endif  // ILF_CORE_H_
