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

#include "rr/error.h"

namespace rr {

std::string_view ErrorName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidMatrix: return "InvalidMatrix";
    case ErrorCode::kInvalidRank: return "InvalidRank";
    case ErrorCode::kNumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::kInvalidKernel: return "InvalidKernel";
    case ErrorCode::kInvalidEmbedding: return "InvalidEmbedding";
    case ErrorCode::kInvalidSeed: return "InvalidSeed";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kInvalidReward: return "InvalidReward";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kEmptyGeneration: return "EmptyGeneration";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kUnknownLayer: return "UnknownLayer";
    case ErrorCode::kCorruptManifest: return "CorruptManifest";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kTruncatedBlob: return "TruncatedBlob";
    case ErrorCode::kNoFeasibleWeight: return "NoFeasibleWeight";
    case ErrorCode::kTrainerFailure: return "TrainerFailure";
    case ErrorCode::kNoSharedLayers: return "NoSharedLayers";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace rr
