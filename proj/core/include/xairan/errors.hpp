/*
 * Copyright 2026 The xairan Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace xairan {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can map library failures to a runtime exit code in one place.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration (flags, config structs, unknown topic).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input text; the message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input whose values break a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller broke a precondition (shape mismatch, stale cache, bad index).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Too few (or too many) elements for the requested computation.
class SizeError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

// A metric whose denominator vanished.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class MeasurementError : public Error {
 public:
  using Error::Error;
};

// Internal consistency failure; indicates a bug rather than bad input.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Throws ContractViolation with `what` when `condition` is false.
void require(bool condition, const std::string& what);

}  // namespace xairan
