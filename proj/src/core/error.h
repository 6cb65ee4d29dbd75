// Copyright 2026 The Spanground Authors.
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

#ifndef SPANGROUND_CORE_ERROR_H_
#define SPANGROUND_CORE_ERROR_H_

#include <stdexcept>
#include <string>

namespace spanground {

// Codes mirror the C API status values one to one.
enum class ErrorCode {
  kInvalidArgument = 1,
  kNotFound = 2,
  kDataError = 3,
  kIoError = 4,
  kNumerical = 5,
  kMismatch = 6,
  kInternal = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spanground

#endif  // SPANGROUND_CORE_ERROR_H_
