// Copyright 2026 The omc Authors.
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

#include <stdexcept>
#include <string>

namespace omc {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input shapes disagree with a simulator's declared schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A requested operation is not supported by the object (e.g. no analytic
// Jacobian available).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Bad configuration values; the CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The inference pipeline could not produce a result; CLI exit code 3.
class InferenceError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ConfigError(what);
}

}  // namespace detail
}  // namespace omc
