// Copyright 2026 The RR-Unlearn Authors. All Rights Reserved.
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

#ifndef RR_ERROR_H_
#define RR_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace rr {

enum class ErrorCode {
  kInvalidMatrix,
  kInvalidRank,
  kNumericalBreakdown,
  kInvalidKernel,
  kInvalidEmbedding,
  kInvalidSeed,
  kEmptyPool,
  kInvalidReward,
  kBackendUnavailable,
  kTimeout,
  kEmptyGeneration,
  kShapeMismatch,
  kUnknownLayer,
  kCorruptManifest,
  kChecksumMismatch,
  kTruncatedBlob,
  kNoFeasibleWeight,
  kTrainerFailure,
  kNoSharedLayers,
  kConfigError,
  kIoError,
  kInvalidArgument,
};

std::string_view ErrorName(ErrorCode code);

// Every typed failure in the pipeline is an rr::Error. The CLI maps
// kConfigError to exit status 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rr

#endif  // RR_ERROR_H_
