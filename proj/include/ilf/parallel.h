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

#ifndef ILF_PARALLEL_H_
#define ILF_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace ilf {

// Runs fn(i) for i in [0, count) on at most `max_parallel` threads and
// returns the results in index order. The first exception (lowest index) is
// rethrown after all workers finish.
template <typename Fn>
auto ParallelMap(size_t count, int max_parallel, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, size_t>> {
  using Result = std::invoke_result_t<Fn&, size_t>;
  std::vector<std::optional<Result>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const size_t threads =
      std::min<size_t>(count, static_cast<size_t>(std::max(1, max_parallel)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  std::vector<Result> results;
  results.reserve(count);
  for (auto& slot : slots) results.push_back(std::move(*slot));
  return results;
}

// Like ParallelMap but keeps per-index failures instead of rethrowing.
template <typename Fn>
auto ParallelTry(size_t count, int max_parallel, Fn&& fn) {
  using Result = std::invoke_result_t<Fn&, size_t>;
  struct Outcome {
    std::optional<Result> value;
    std::exception_ptr error;
  };
  return ParallelMap(count, max_parallel, [&](size_t i) {
    Outcome outcome;
    try {
      outcome.value.emplace(fn(i));
    } catch (...) {
      outcome.error = std::current_exception();
    }
    return outcome;
  });
}

}  // namespace ilf

#endif  // ILF_PARALLEL_H_
