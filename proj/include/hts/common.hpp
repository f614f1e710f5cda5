/*
   Copyright 2026 The hts Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace hts {

// Classes are indexed i in {0,1}, servers k in {0,1}. Serialized forms
// (JSON, event logs) use 1-based labels.
using Vec2 = std::array<double, 2>;
using Mat2 = std::array<Vec2, 2>; // Mat2[i][k]

// Absolute tolerance applied to data normalized to unit maximum entry.
inline constexpr double kStructTol = 1e-9;

inline int other(int index) { return 1 - index; }

/// Reasons the analysis pipeline refuses an instance instead of guessing.
enum class Refusal {
  NotProductForm,
  BoundaryCase,
  DegenerateMode,
  NotCritical,
  Nondegeneracy,
  NoBracket,
  TailBoundExceeded,
  PolicyCaseMismatch,
  NonpositiveRate,
  InternalError,
};

const char* to_string(Refusal r);

/// Mathematical refusal: the inputs are well formed but outside the
/// supported regime (CLI exit code 3).
class MathError : public std::runtime_error {
 public:
  MathError(Refusal reason, const std::string& what)
      : std::runtime_error(std::string(to_string(reason)) + ": " + what),
        reason_(reason) {}
  Refusal reason() const { return reason_; }

 private:
  Refusal reason_;
};

/// Malformed or inconsistent configuration (CLI exit code 2). `path` is a
/// JSON-pointer-like location of the offending value.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error((path.empty() ? "/" : path) + ": " + what),
        path_(std::move(path)),
        message_(what) {}
  const std::string& path() const { return path_; }
  const std::string& message() const { return message_; }

 private:
  std::string path_;
  std::string message_;
};

}  // namespace hts
