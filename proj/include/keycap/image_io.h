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

#ifndef KEYCAP_IMAGE_IO_H_
#define KEYCAP_IMAGE_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace keycap {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // RGB24, row-major
};

std::vector<std::uint8_t> encode_png(int width, int height,
                                     std::span<const std::uint8_t> rgb);
RgbImage decode_png(std::span<const std::uint8_t> bytes);

/// Decodes a .png/.jpg/.jpeg file (chosen by extension) to RGB24.
RgbImage decode_image_file(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace keycap

#endif  // KEYCAP_IMAGE_IO_H_
