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

#include "ilf/select.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "ilf/error.h"
#include "ilf/http_backend.h"
#include "ilf/parallel.h"
#include "ilf/text.h"

namespace ilf {

LabelProbe InstructRmProbe(const TemplateSet& templates, int prompt_index,
                           const Sample& sample, std::string_view candidate) {
  const PromptTemplate& tmpl = templates.Get(InstructRmTemplate(prompt_index));
  LabelProbe probe;
  probe.prompt = RenderPrompt(tmpl, sample, {{"refinement", std::string(candidate)}});
  if (prompt_index == 3 || prompt_index == 5) {
    probe.good_label = " True";
    probe.bad_label = " False";
  }
  return probe;
}

double ScoreInstructRm(const Policy& policy, const TemplateSet& templates,
                       const Sample& sample, std::string_view candidate,
                       int prompt_index) {
  return LabelProbability(
      policy, InstructRmProbe(templates, prompt_index, sample, candidate));
}

double ScoreEnsemble(const Policy& policy, const TemplateSet& templates,
                     const Sample& sample, std::string_view candidate,
                     int max_parallel) {
  auto outcomes = ParallelTry(kInstructRmPrompts, max_parallel, [&](size_t i) {
    return ScoreInstructRm(policy, templates, sample, candidate,
                           static_cast<int>(i) + 1);
  });
  double total = 0.0;
  std::string failed;
  for (size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].value) {
      total += *outcomes[i].value;
      continue;
    }
    std::string reason = "unknown error";
    try {
      std::rethrow_exception(outcomes[i].error);
    } catch (const std::exception& e) {
      reason = e.what();
    }
    failed += (failed.empty() ? "" : "; ") + std::string("prompt ") +
              std::to_string(i + 1) + ": " + reason;
  }
  if (!failed.empty()) {
    Fail(ErrorKind::kEnsemble, "InstructRM ensemble members failed: " + failed);
  }
  return total / kInstructRmPrompts;
}

// ---------------------------------------------------------------------------

HashingEmbedder::HashingEmbedder(int dimension, uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  Require(dimension_ >= 1, "embedding dimension must be >= 1");
}

std::pair<size_t, double> HashingEmbedder::Slot(std::string_view token) const {
  const uint64_t h = MixSeed(seed_, token);
  return {static_cast<size_t>(h % static_cast<uint64_t>(dimension_)),
          (h >> 63) ? -1.0 : 1.0};
}

std::vector<double> HashingEmbedder::Embed(std::string_view text) const {
  std::vector<double> vec(static_cast<size_t>(dimension_), 0.0);
  for (const TokenSpan& span : Tokenize(text)) {
    std::string token(text.substr(span.begin, span.end - span.begin));
    size_t pos = 0;
    if (!IsWordCodePoint(DecodeUtf8(token, pos))) continue;
    std::transform(token.begin(), token.end(), token.begin(), [](char c) {
      return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    });
    const auto [index, sign] = Slot(token);
    vec[index] += sign;
  }
  return vec;
}

struct HttpEmbedder::Impl {
  explicit Impl(const BackendSpec& spec) : client(HttpConfig::FromSpec(spec)) {}
  HttpClient client;
};

HttpEmbedder::HttpEmbedder(const BackendSpec& connection, std::string model)
    : impl_(std::make_unique<Impl>(connection)), model_(std::move(model)) {}

HttpEmbedder::~HttpEmbedder() = default;

std::vector<double> HttpEmbedder::Embed(std::string_view text) const {
  const Json response =
      impl_->client.Post("/embeddings", {{"model", model_}, {"input", text}});
  try {
    return response.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw BackendError(1, std::string("unexpected embedding response: ") +
                              e.what());
  }
}

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), "cosine similarity needs equal dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    Fail(ErrorKind::kUndefinedSimilarity,
         "cosine similarity is undefined for a zero vector");
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double ScoreEmbedding(const Embedder& embedder, std::string_view feedback,
                      std::string_view candidate) {
  const std::vector<double> f = embedder.Embed(feedback);
  const std::vector<double> c = embedder.Embed(candidate);
  return CosineSimilarity(f, c);
}

// ---------------------------------------------------------------------------

int SelectBest(std::span<const double> scores) {
  Require(!scores.empty(), "select_best needs at least one score");
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<int>(best);
}

std::vector<double> ImportanceWeights(std::span<const double> scores,
                                      const Beta& beta) {
  Require(!scores.empty(), "importance_weights needs at least one score");
  for (double s : scores) {
    if (std::isnan(s)) Fail(ErrorKind::kValidation, "score is NaN");
    if (!std::isfinite(s)) Fail(ErrorKind::kValidation, "score is not finite");
  }
  std::vector<double> weights(scores.size(), 0.0);
  if (beta.is_infinite()) {
    weights[SelectBest(scores)] = 1.0;
    return weights;
  }
  const double b = beta.value();
  double top = b * scores[0];
  for (double s : scores) top = std::max(top, b * s);
  double total = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    weights[i] = std::exp(b * scores[i] - top);
    total += weights[i];
  }
  for (double& w : weights) w /= total;
  return weights;
}

// ---------------------------------------------------------------------------

namespace {

// Empty candidates cannot be rendered or embedded; they get the scorer's
// floor value so any non-empty candidate outranks them.
template <typename Fn>
std::vector<double> ScoreNonEmpty(std::span<const std::string> candidates,
                                  double floor, int max_parallel, Fn&& fn) {
  return ParallelMap(candidates.size(), max_parallel, [&](size_t i) {
    return candidates[i].empty() ? floor : fn(candidates[i]);
  });
}

// Uses (c, x0, f, x1).
class InstructRmScorer : public Scorer {
 public:
  InstructRmScorer(ScorerDeps deps, int prompt_index)
      : deps_(std::move(deps)), prompt_index_(prompt_index) {}

  std::string name() const override {
    return prompt_index_ == 0
               ? "instructrm_ensemble"
               : "instructrm_single_" + std::to_string(prompt_index_);
  }

  std::vector<double> Score(
      const Sample& sample,
      std::span<const std::string> candidates) const override {
    return ScoreNonEmpty(
        candidates, 0.0, deps_.max_parallel, [&](const std::string& c) {
          return prompt_index_ == 0
                     ? ScoreEnsemble(*deps_.policy, *deps_.templates, sample, c)
                     : ScoreInstructRm(*deps_.policy, *deps_.templates, sample,
                                       c, prompt_index_);
        });
  }

 private:
  ScorerDeps deps_;
  int prompt_index_;  // 0 = ensemble
};

// Uses (f, x1) only.
class EmbeddingScorer : public Scorer {
 public:
  explicit EmbeddingScorer(ScorerDeps deps) : deps_(std::move(deps)) {}
  std::string name() const override { return "embedding_similarity"; }
  std::vector<double> Score(
      const Sample& sample,
      std::span<const std::string> candidates) const override {
    return ScoreNonEmpty(candidates, -1.0, deps_.max_parallel,
                         [&](const std::string& c) {
                           return ScoreEmbedding(*deps_.embedder,
                                                 sample.feedback, c);
                         });
  }

 private:
  ScorerDeps deps_;
};

// Uses x1 only: its token count.
class MaxLengthScorer : public Scorer {
 public:
  std::string name() const override { return "max_length"; }
  std::vector<double> Score(
      const Sample&, std::span<const std::string> candidates) const override {
    std::vector<double> out;
    for (const std::string& c : candidates) {
      out.push_back(static_cast<double>(CountTokens(c)));
    }
    return out;
  }
};

// Ignores every argument; uniform in [0, 1) keyed by sample id and index.
class RandomScorer : public Scorer {
 public:
  explicit RandomScorer(uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "random"; }
  std::vector<double> Score(
      const Sample& sample,
      std::span<const std::string> candidates) const override {
    std::vector<double> out;
    for (size_t i = 0; i < candidates.size(); ++i) {
      const uint64_t bits =
          MixSeed(MixSeed(seed_, "random-scorer:" + sample.id), i);
      out.push_back(static_cast<double>(bits >> 11) * 0x1.0p-53);
    }
    return out;
  }

 private:
  uint64_t seed_;
};

}  // namespace

std::unique_ptr<Scorer> MakeScorer(const ScorerSpec& spec, ScorerDeps deps) {
  if (!deps.templates) deps.templates = std::make_shared<TemplateSet>();
  if (spec.kind == "instructrm_ensemble" || spec.kind == "instructrm_single") {
    if (!deps.policy) {
      Fail(ErrorKind::kValidation,
           "InstructRM scorers need a label-probability capable policy");
    }
    const int index = spec.kind == "instructrm_ensemble" ? 0 : spec.prompt_index;
    if (index != 0) InstructRmTemplate(index);  // validates 1..5
    return std::make_unique<InstructRmScorer>(std::move(deps), index);
  }
  if (spec.kind == "embedding_similarity") {
    if (!deps.embedder) {
      if (spec.embedding_base_url.empty()) {
        deps.embedder =
            std::make_shared<HashingEmbedder>(spec.embedding_dim, deps.seed);
      } else {
        BackendSpec connection;
        connection.kind = "http";
        connection.base_url = spec.embedding_base_url;
        deps.embedder =
            std::make_shared<HttpEmbedder>(connection, spec.embedding_model);
      }
    }
    return std::make_unique<EmbeddingScorer>(std::move(deps));
  }
  if (spec.kind == "max_length") return std::make_unique<MaxLengthScorer>();
  if (spec.kind == "random") return std::make_unique<RandomScorer>(deps.seed);
  Fail(ErrorKind::kValidation, "unknown scorer kind '" + spec.kind + "'");
}

void ApplyWeights(RefinementSet& set, const Beta& beta) {
  set.weights = ImportanceWeights(set.scores, beta);
  set.selected_index = SelectBest(set.scores);
}

void ScoreAndSelect(RefinementSet& set, const Sample& sample,
                    const Scorer& scorer, const Beta& beta) {
  Require(!set.candidates.empty(), "refinement set has no candidates");
  if (std::all_of(set.candidates.begin(), set.candidates.end(),
                  [](const std::string& c) { return c.empty(); })) {
    Fail(ErrorKind::kSelection, "every candidate of sample '" + set.sample_id +
                                    "' postprocessed to empty text");
  }
  set.scores = scorer.Score(sample, set.candidates);
  ApplyWeights(set, beta);
}

}  // namespace ilf
