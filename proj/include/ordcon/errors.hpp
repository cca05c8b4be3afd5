/* Copyright 2026 The OrdCon Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace ordcon {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto its stable exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A precondition on values was violated: division by zero, log of a
// non-positive entry, a vector norm below the floor, a label out of range.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or spec field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem or parse failure. Messages carry the path and, for tabular
// files, the line number.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values appeared during training or gradient checking.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Checkpoint or data incompatible with what the caller expects.
class CompatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ordcon
