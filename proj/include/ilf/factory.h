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

#ifndef ILF_FACTORY_H_
#define ILF_FACTORY_H_

#include <memory>

#include "ilf/backend.h"
#include "ilf/core.h"
#include "ilf/ilf_loop.h"
#include "ilf/select.h"

namespace ilf {

// rule_mock, scripted, http or categorical.
PolicyHandle MakePolicy(const BackendSpec& spec);

// Remote embedder when the scorer names an endpoint, hashing otherwise.
// Remote calls reuse the key and retry settings of `connection`.
std::shared_ptr<const Embedder> MakeEmbedder(const ScorerSpec& spec,
                                             const BackendSpec& connection);

// imitation or http.
std::shared_ptr<const FinetuneBackend> MakeFinetuneBackend(const BackendSpec& spec);

}  // namespace ilf

#endif  // ILF_FACTORY_H_
