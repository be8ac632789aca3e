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

#ifndef KEYCAP_FRAME_H_
#define KEYCAP_FRAME_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace keycap {

/// Frame rate as a rational number of frames per second.
struct Fps {
  std::int64_t num = 25;
  std::int64_t den = 1;

  bool valid() const { return num > 0 && den > 0; }
  /// Seconds per frame.
  double period() const { return static_cast<double>(den) / static_cast<double>(num); }
  double time_of(std::size_t index) const {
    return static_cast<double>(index) * static_cast<double>(den) / static_cast<double>(num);
  }
};

/// Parses "N" or "N/D" (also "N:D"). Throws std::invalid_argument.
Fps parse_fps(const std::string& text);

/// A decoded RGB24 raster, row-major, 3 bytes per pixel.
struct Frame {
  std::size_t index = 0;
  double time_s = 0.0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

}  // namespace keycap

#endif  // KEYCAP_FRAME_H_
