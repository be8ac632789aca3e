// Copyright 2026 The Keycap Authors.
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

#ifndef KEYCAP_FILEUTIL_H_
#define KEYCAP_FILEUTIL_H_

#include <filesystem>
#include <string_view>

namespace keycap {

/// Writes `content` to a sibling temp file and renames it over `path`, so
/// readers see either the old file or the complete new one. Throws
/// std::filesystem::filesystem_error or std::runtime_error.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace keycap

#endif  // KEYCAP_FILEUTIL_H_
