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

#ifndef ILF_SELECT_H_
#define ILF_SELECT_H_

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ilf/backend.h"
#include "ilf/core.h"
#include "ilf/templates.h"

namespace ilf {

inline constexpr int kInstructRmPrompts = 5;

// The InstructRM question for one prompt variant, answered by " Yes"/" No"
// (" True"/" False" for variants 3 and 5).
LabelProbe InstructRmProbe(const TemplateSet& templates, int prompt_index,
                           const Sample& sample, std::string_view candidate);

double ScoreInstructRm(const Policy& policy, const TemplateSet& templates,
                       const Sample& sample, std::string_view candidate,
                       int prompt_index);

// Mean of the five single-prompt scores. Fails with kEnsemble naming every
// member that could not be scored.
double ScoreEnsemble(const Policy& policy, const TemplateSet& templates,
                     const Sample& sample, std::string_view candidate,
                     int max_parallel = 1);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> Embed(std::string_view text) const = 0;
};

// Signed feature hashing of lower-cased word tokens.
class HashingEmbedder : public Embedder {
 public:
  explicit HashingEmbedder(int dimension = 256, uint64_t seed = 0);
  std::vector<double> Embed(std::string_view text) const override;

  int dimension() const { return dimension_; }
  // Bucket and sign a token lands on.
  std::pair<size_t, double> Slot(std::string_view token) const;

 private:
  int dimension_;
  uint64_t seed_;
};

// POST {base}/embeddings {model, input} -> data[0].embedding, sharing the
// HTTP backend's retry and in-flight settings.
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(const BackendSpec& connection, std::string model);
  ~HttpEmbedder() override;
  std::vector<double> Embed(std::string_view text) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string model_;
};

double CosineSimilarity(std::span<const double> a, std::span<const double> b);

double ScoreEmbedding(const Embedder& embedder, std::string_view feedback,
                      std::string_view candidate);

// Index of the maximum score; the lowest index wins ties.
int SelectBest(std::span<const double> scores);

// Self-normalised softmax(beta * scores); one-hot at SelectBest for
// infinite beta.
std::vector<double> ImportanceWeights(std::span<const double> scores,
                                      const Beta& beta);

// Scores candidates of a refinement set for one sample. Implementations
// document which of (context, initial output, feedback, candidate) they use.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> Score(const Sample& sample,
                                    std::span<const std::string> candidates) const = 0;
};

struct ScorerDeps {
  PolicyHandle policy;  // label-probability capable, for InstructRM kinds
  std::shared_ptr<const TemplateSet> templates;
  std::shared_ptr<const Embedder> embedder;  // defaults to hashing
  uint64_t seed = 0;                         // for the random scorer
  int max_parallel = 4;
};

std::unique_ptr<Scorer> MakeScorer(const ScorerSpec& spec, ScorerDeps deps);

// Fills scores, weights and selected_index.
void ScoreAndSelect(RefinementSet& set, const Sample& sample,
                    const Scorer& scorer, const Beta& beta);

// Weights and selection from existing scores.
void ApplyWeights(RefinementSet& set, const Beta& beta);

}  // namespace ilf

#endif  // ILF_SELECT_H_
