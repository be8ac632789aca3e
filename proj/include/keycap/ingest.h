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

#ifndef KEYCAP_INGEST_H_
#define KEYCAP_INGEST_H_

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "keycap/frame.h"

namespace keycap {

enum class SourceKind { kY4m, kRgb24Raw, kFrameDir };

/// Where frames come from. `locator` "-" means standard input (y4m and
/// rgb24-raw only). fps is required for rgb24-raw and frame-dir; y4m takes
/// it from the stream header. width/height are required for rgb24-raw.
struct FrameSource {
  SourceKind kind = SourceKind::kY4m;
  std::string locator;
  std::optional<Fps> fps;
  int width = 0;
  int height = 0;
};

SourceKind parse_source_kind(const std::string& name);

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sequential decoder with random access to frames already streamed.
//
// next() yields frames in order with index 0..N-1 and throws IngestError on
// a malformed header, a truncated payload (naming the incomplete frame's
// index), inconsistent geometry, or a source with no frames at all.
//
// read(i) returns frame i again. File-backed sources seek back into the
// file; standard-input sources are spooled to an anonymous temporary file as
// they stream, so memory stays bounded by one frame either way.
class FrameReader {
 public:
  virtual ~FrameReader() = default;

  static std::unique_ptr<FrameReader> open(const FrameSource& source);

  virtual std::optional<Frame> next() = 0;
  virtual Frame read(std::size_t index) = 0;

  Fps fps() const { return fps_; }
  int width() const { return width_; }
  int height() const { return height_; }
  /// Frames yielded by next() so far.
  std::size_t frames_read() const { return count_; }

 protected:
  Frame make_frame(std::size_t index, std::vector<std::uint8_t> pixels) const;

  Fps fps_;
  int width_ = 0;
  int height_ = 0;
  std::size_t count_ = 0;
};

/// Reads every frame of `source` into memory.
std::vector<Frame> ingest_frames(const FrameSource& source);

/// Converts one planar Y4M frame to RGB24 (BT.601 full range, nearest-
/// neighbour chroma). `chroma_w`/`chroma_h` give the chroma plane geometry;
/// pass 0 for monochrome.
std::vector<std::uint8_t> yuv_to_rgb(const std::uint8_t* y, const std::uint8_t* u,
                                     const std::uint8_t* v, int width, int height,
                                     int chroma_w, int chroma_h);

}  // namespace keycap

#endif  // KEYCAP_INGEST_H_
