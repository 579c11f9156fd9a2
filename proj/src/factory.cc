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

#include "ilf/factory.h"

#include "ilf/error.h"
#include "ilf/http_backend.h"
#include "ilf/mock_backends.h"

namespace ilf {

PolicyHandle MakePolicy(const BackendSpec& spec) {
  if (spec.kind == "rule_mock") {
    return std::make_shared<RuleMockPolicy>(spec.model_id, spec.corruption, spec.seed);
  }
  if (spec.kind == "scripted") {
    Require(!spec.fixtures_dir.empty(), "scripted backend needs fixtures_dir");
    return ScriptedPolicy::LoadDir(spec.fixtures_dir, spec.model_id);
  }
  if (spec.kind == "http") {
    Require(!spec.base_url.empty(), "http backend needs base_url");
    return std::make_shared<HttpPolicy>(HttpConfig::FromSpec(spec));
  }
  if (spec.kind == "categorical") {
    return std::make_shared<CategoricalPolicy>(spec.model_id, spec.tokens);
  }
  Fail(ErrorKind::kValidation, "unknown backend kind '" + spec.kind + "'");
}

std::shared_ptr<const Embedder> MakeEmbedder(const ScorerSpec& spec,
                                             const BackendSpec& connection) {
  if (spec.embedding_base_url.empty()) {
    return std::make_shared<HashingEmbedder>(spec.embedding_dim);
  }
  BackendSpec remote = connection;
  remote.base_url = spec.embedding_base_url;
  return std::make_shared<HttpEmbedder>(remote, spec.embedding_model);
}

std::shared_ptr<const FinetuneBackend> MakeFinetuneBackend(const BackendSpec& spec) {
  if (spec.kind == "imitation") return std::make_shared<ImitationFinetuneBackend>();
  if (spec.kind == "http") {
    Require(!spec.base_url.empty(), "http finetune backend needs base_url");
    return std::make_shared<HttpFinetuneBackend>(
        HttpFinetuneClient(HttpConfig::FromSpec(spec)));
  }
  Fail(ErrorKind::kValidation, "unknown finetune backend '" + spec.kind + "'");
}

}  // namespace ilf
