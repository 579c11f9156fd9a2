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

#ifndef ILF_ERROR_H_
#define ILF_ERROR_H_

#include <stdexcept>
#include <string>

namespace ilf {

// Coarse classification used by the CLI to pick an exit code.
enum class ErrorKind {
  kPrecondition,
  kValidation,
  kParse,
  kIo,
  kTemplate,
  kBackend,
  kCapability,
  kFixtureMiss,
  kDegenerateProbe,
  kUndefinedSimilarity,
  kSelection,
  kEnsemble,
  kLookup,
  kFinetune,
  kResumableAbort,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // Validation-type errors map to exit code 1, everything else to 2.
  bool is_validation() const;

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(size_t line, const std::string& message)
      : Error(ErrorKind::kParse,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

class BackendError : public Error {
 public:
  BackendError(int attempts, const std::string& message)
      : Error(ErrorKind::kBackend, message + " (after " +
                                       std::to_string(attempts) +
                                       " attempt(s))"),
        attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

class TemplateError : public Error {
 public:
  explicit TemplateError(const std::string& placeholder,
                         const std::string& detail = "missing value")
      : Error(ErrorKind::kTemplate,
              "template placeholder {" + placeholder + "}: " + detail),
        placeholder_(placeholder) {}
  const std::string& placeholder() const { return placeholder_; }

 private:
  std::string placeholder_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void Require(bool condition, const std::string& message) {
  if (!condition) Fail(ErrorKind::kPrecondition, message);
}

}  // namespace ilf

#endif  // ILF_ERROR_H_
