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

#ifndef RR_FILES_H_
#define RR_FILES_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rr {

// Whole-file helpers. Failures throw kIoError naming the path.
std::vector<std::uint8_t> ReadBinaryFile(const std::filesystem::path& path);
std::string ReadTextFile(const std::filesystem::path& path);
void WriteBinaryFile(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

// Lowercase hex SHA-256.
std::string Sha256Hex(std::span<const std::uint8_t> bytes);
std::string Sha256Hex(std::string_view text);
std::string Sha256OfFile(const std::filesystem::path& path);

// Little-endian IEEE-754 float32 encoding.
void AppendFloat32Le(double value, std::vector<std::uint8_t>& out);
float LoadFloat32Le(const std::uint8_t* bytes);

}  // namespace rr

#endif  // RR_FILES_H_
