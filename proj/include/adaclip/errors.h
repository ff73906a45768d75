//
// Copyright 2026 The AdaClip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef ADACLIP_ERRORS_H_
#define ADACLIP_ERRORS_H_

#include <stdexcept>
#include <string>

namespace adaclip {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent run configuration. `path` is the dotted field
// path of the offending key, empty when the error is document-wide.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)), message_(what) {}
  const std::string& path() const { return path_; }
  const std::string& message() const { return message_; }

 private:
  std::string path_;
  std::string message_;
};

// Requested noise split has no solution (effective multiplier too large for
// the count-noise budget).
class CalibrationError : public Error {
 public:
  using Error::Error;
};

// Dataset could not be read or parsed.
class IngestError : public Error {
 public:
  using Error::Error;
};

// Training produced non-finite values.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Accountant parameters outside the numerically supported range.
class AccountingError : public Error {
 public:
  using Error::Error;
};

}  // namespace adaclip

#endif  // ADACLIP_ERRORS_H_
