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

#ifndef RR_TEXT_H_
#define RR_TEXT_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rr {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

// 64-bit FNV-1a, continuing from h.
std::uint64_t Fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset);
// Folds v into h and finishes with a splitmix64 avalanche.
std::uint64_t HashCombine(std::uint64_t h, std::uint64_t v);
std::uint64_t HashDoubles(std::uint64_t h, std::span<const double> values);

// Lowercased, whitespace-separated tokens.
std::vector<std::string> Tokenize(std::string_view text);
// Lowercase with runs of whitespace collapsed to one space and the ends
// trimmed. Two responses are duplicates iff their normalized forms match.
std::string NormalizeText(std::string_view text);
std::string_view Trim(std::string_view text);

}  // namespace rr

#endif  // RR_TEXT_H_
