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

#ifndef ILF_REFINE_H_
#define ILF_REFINE_H_

#include <string>
#include <string_view>

#include "ilf/backend.h"
#include "ilf/core.h"
#include "ilf/templates.h"

namespace ilf {

// Cleans a sampled completion: strips leading non-word characters, cuts at
// the first newline, trims trailing spaces, truncates to `max_tokens` tokens
// and drops a trailing fragment that does not end a sentence.
std::string Postprocess(std::string_view raw, int max_tokens);

// Samples `n` completions of `tmpl` rendered on `sample` and postprocesses
// each. Scores and weights of the result are left empty.
RefinementSet GenerateRefinements(const Policy& policy,
                                  const PromptTemplate& tmpl,
                                  const Sample& sample, int n,
                                  const SamplingParams& params);

}  // namespace ilf

#endif  // ILF_REFINE_H_
