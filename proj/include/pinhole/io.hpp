// Copyright 2026 The Pinhole Authors.
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

#ifndef PINHOLE_IO_HPP_
#define PINHOLE_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace pinhole {

/// Shortest form with 17 significant digits; round-trips every double.
std::string format_double(double value);

/// Parses a whole token as a double; returns false on any trailing garbage.
bool parse_double(std::string_view token, double& value);

/// Writes `contents` to a sibling temp file, then renames it over `path`.
/// A failed or interrupted write never leaves a truncated target behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace pinhole

#endif  // PINHOLE_IO_HPP_
