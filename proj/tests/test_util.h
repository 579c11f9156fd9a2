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

#ifndef ILF_TESTS_TEST_UTIL_H_
#define ILF_TESTS_TEST_UTIL_H_

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "ilf/core.h"

namespace ilf::testing {

inline std::filesystem::path SourceDir() { return ILF_SOURCE_DIR; }

// Golden file contents without the final newline.
inline std::string Golden(const std::string& name) {
  std::string text = ReadTextFile(SourceDir() / "tests" / "golden" / name);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ilf-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Sample MakeSample(const std::string& id) {
  Sample sample;
  sample.id = id;
  sample.title = "Title " + id;
  sample.post = "Post body for " + id + ". It has two sentences.";
  sample.initial_output = "A summary of " + id + ".";
  sample.feedback = "Mention the second sentence.";
  sample.feedback_category = FeedbackCategory::kCoverage;
  return sample;
}

}  // namespace ilf::testing

#endif  // ILF_TESTS_TEST_UTIL_H_
