// Copyright 2026 The latte Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace latte {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed external data (embedding files, dumps, checkpoints, TSV).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes that do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or argument values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Inputs that are well-formed but unusable (empty corpus, constant ranks...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Iterative numerical procedures that did not converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

}  // namespace detail

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Threshold read once from LATTE_LOG (error|warn|info|debug); default warn.
inline LogLevel log_threshold() {
  static const LogLevel level = [] {
    const char* env = std::getenv("LATTE_LOG");
    if (env == nullptr) return LogLevel::warn;
    const std::string_view v{env};
    if (v == "error") return LogLevel::error;
    if (v == "info") return LogLevel::info;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::warn;
  }();
  return level;
}

template <typename... Args>
void log(LogLevel level, Args&&... args) {
  if (static_cast<int>(level) > static_cast<int>(log_threshold())) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  std::cerr << "[latte:" << kNames[static_cast<int>(level)] << "] "
            << detail::concat(std::forward<Args>(args)...) << '\n';
}

}  // namespace latte
