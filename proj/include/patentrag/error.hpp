// Copyright 2026 The patentrag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
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

namespace patentrag {

enum class ErrorCode {
  // corpus
  UnreadableSource,
  UnknownFormat,
  EmptyCorpus,
  // embedder
  EmptyText,
  RemoteUnavailable,
  DimensionMismatch,
  // index
  DuplicateDocId,
  EmptyIndex,
  BadK,
  TooFewVectors,
  NotTrained,
  BadNprobe,
  CorruptFile,
  IoFailure,
  // ragpipe
  UnknownDocId,
  GeneratorUnavailable,
  EmptyContext,
  // evalkit
  EmptyRelevantSet,
  EmptyHits,
  EmptyInput,
  NoSuccessfulQueries,
  // shared
  InvalidArgument,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a stable machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnreadableSource: return "UnreadableSource";
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::RemoteUnavailable: return "RemoteUnavailable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateDocId: return "DuplicateDocId";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::TooFewVectors: return "TooFewVectors";
    case ErrorCode::NotTrained: return "NotTrained";
    case ErrorCode::BadNprobe: return "BadNprobe";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::UnknownDocId: return "UnknownDocId";
    case ErrorCode::GeneratorUnavailable: return "GeneratorUnavailable";
    case ErrorCode::EmptyContext: return "EmptyContext";
    case ErrorCode::EmptyRelevantSet: return "EmptyRelevantSet";
    case ErrorCode::EmptyHits: return "EmptyHits";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoSuccessfulQueries: return "NoSuccessfulQueries";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace patentrag
