// Copyright 2026 The demokit Authors
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

namespace demokit {

/// Base class of all recoverable pipeline errors. `kind()` is the stable
/// machine-readable identifier emitted in CLI error JSON.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual const char* kind() const { return "error"; }
};

/// Malformed input text. Carries the 1-based line number when known (0 if not).
struct ParseError : Error {
  explicit ParseError(const std::string& msg, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_number(line) {}
  const char* kind() const override { return "parse"; }
  int line_number = 0;
};

/// Numerically degenerate input: zero-norm quaternion, collinear 6D columns,
/// all-zero trajectory, and similar.
struct DegenerateInput : Error {
  using Error::Error;
  const char* kind() const override { return "degenerate_input"; }
};

/// Caller violated an interface precondition (bad fraction, dims, config).
struct InvalidArgument : Error {
  using Error::Error;
  const char* kind() const override { return "invalid_argument"; }
};

/// Sequences that should line up do not (frame/pose/grip length mismatch,
/// too few frames to align actions).
struct AlignmentError : Error {
  using Error::Error;
  const char* kind() const override { return "alignment"; }
};

/// Filesystem-level failure: missing file, unwritable path, lock conflict.
struct IoError : Error {
  using Error::Error;
  const char* kind() const override { return "io"; }
};

/// Optimization produced a non-finite loss.
struct TrainingDiverged : Error {
  using Error::Error;
  const char* kind() const override { return "training_diverged"; }
};

}  // namespace demokit
