// Copyright 2026 The KWS Streaming Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kws {

enum class ErrorKind {
  kEmptyInput,
  kUnsupportedRate,
  kUnsupportedFormat,
  kInsufficientFrames,
  kShape,
  kInvalidStats,
  kFrontEndTooDeep,
  kUnknownModel,
  kInvalidConfig,
  kUnsupportedModel,
  kBadMagic,
  kBadVersion,
  kBadHeader,
  kTruncated,
  kSizeMismatch,
  kMissingTensor,
  kUnexpectedTensor,
  kIo,
  kUndefinedMean,
  kUndefinedThreshold,
  kClock,
  kTooManyFailures,
  kInvalidArgument,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and tests)
// can tell e.g. a truncated weight file from a bad magic number.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kEmptyInput: return "empty input";
    case ErrorKind::kUnsupportedRate: return "unsupported sample rate";
    case ErrorKind::kUnsupportedFormat: return "unsupported audio format";
    case ErrorKind::kInsufficientFrames: return "insufficient frames";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kInvalidStats: return "invalid batch-norm statistics";
    case ErrorKind::kFrontEndTooDeep: return "front end too deep";
    case ErrorKind::kUnknownModel: return "unknown model";
    case ErrorKind::kInvalidConfig: return "invalid config";
    case ErrorKind::kUnsupportedModel: return "unsupported model";
    case ErrorKind::kBadMagic: return "bad magic";
    case ErrorKind::kBadVersion: return "bad version";
    case ErrorKind::kBadHeader: return "bad header";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kSizeMismatch: return "size mismatch";
    case ErrorKind::kMissingTensor: return "missing tensor";
    case ErrorKind::kUnexpectedTensor: return "unexpected tensor";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kUndefinedMean: return "undefined mean";
    case ErrorKind::kUndefinedThreshold: return "undefined threshold";
    case ErrorKind::kClock: return "clock error";
    case ErrorKind::kTooManyFailures: return "too many failures";
    case ErrorKind::kInvalidArgument: return "invalid argument";
  }
  return "error";
}

}  // namespace kws
