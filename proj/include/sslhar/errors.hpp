// Copyright 2026 The sslhar Authors.
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

namespace sslhar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed on-disk layout (missing manifest, bad header, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Content that violates a data invariant (empty recording, bad timestamps).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A value that is not described by the dataset manifest.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Tensor or window shapes that do not fit an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or store content that does not match its manifest.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration or arguments.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Requested behaviour that the library deliberately does not provide.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace sslhar
