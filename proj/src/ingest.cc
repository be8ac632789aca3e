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

#include "keycap/ingest.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iostream>
#include <sstream>

#include "keycap/image_io.h"

namespace keycap {

namespace fs = std::filesystem;

Fps parse_fps(const std::string& text) {
  Fps fps;
  auto sep = text.find_first_of("/:");
  std::string num = text.substr(0, sep);
  std::string den = sep == std::string::npos ? "1" : text.substr(sep + 1);
  auto parse = [&](const std::string& s, std::int64_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
      throw std::invalid_argument("bad frame rate '" + text + "'");
    }
  };
  parse(num, fps.num);
  parse(den, fps.den);
  if (!fps.valid()) throw std::invalid_argument("frame rate must be positive: '" + text + "'");
  return fps;
}

SourceKind parse_source_kind(const std::string& name) {
  if (name == "y4m") return SourceKind::kY4m;
  if (name == "rgb24" || name == "rgb24-raw") return SourceKind::kRgb24Raw;
  if (name == "frames" || name == "frame-dir") return SourceKind::kFrameDir;
  throw std::invalid_argument("unknown input format '" + name + "'");
}

namespace {

std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Fixed-size raster spool backing random access for non-seekable inputs.
class Spool {
 public:
  explicit Spool(std::size_t frame_bytes) : frame_bytes_(frame_bytes), file_(std::tmpfile()) {
    if (file_ == nullptr) throw IngestError("cannot create spool file");
  }
  ~Spool() { std::fclose(file_); }
  Spool(const Spool&) = delete;
  Spool& operator=(const Spool&) = delete;

  void append(const std::vector<std::uint8_t>& pixels) {
    std::fseek(file_, 0, SEEK_END);
    if (std::fwrite(pixels.data(), 1, pixels.size(), file_) != pixels.size()) {
      throw IngestError("spool write failed");
    }
  }
  std::vector<std::uint8_t> at(std::size_t index) {
    std::vector<std::uint8_t> out(frame_bytes_);
    std::fseek(file_, static_cast<long>(index * frame_bytes_), SEEK_SET);
    if (std::fread(out.data(), 1, out.size(), file_) != out.size()) {
      throw IngestError("spool read failed at frame " + std::to_string(index));
    }
    return out;
  }

 private:
  std::size_t frame_bytes_;
  std::FILE* file_;
};

// Input stream that is either a file (seekable, with a second handle for
// random access) or standard input.
struct ByteInput {
  explicit ByteInput(const std::string& locator) : from_stdin(locator == "-") {
    if (from_stdin) {
      in = &std::cin;
      return;
    }
    file.open(locator, std::ios::binary);
    if (!file) throw IngestError("cannot open input '" + locator + "'");
    seek_file.open(locator, std::ios::binary);
    in = &file;
  }

  // Reads up to n bytes, returning how many were read.
  std::size_t read(std::uint8_t* dst, std::size_t n) {
    in->read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in->gcount());
  }

  bool from_stdin;
  std::istream* in = nullptr;
  std::ifstream file;
  std::ifstream seek_file;
};

class Y4mReader : public FrameReader {
 public:
  Y4mReader(const FrameSource& source) : input_(source.locator) {
    std::string header;
    if (!read_line(header, 4096)) throw IngestError("zero frames");
    parse_header(header);
    if (source.fps) fps_ = *source.fps;
    plane_y_ = static_cast<std::size_t>(width_) * height_;
    plane_c_ = static_cast<std::size_t>(chroma_w_) * chroma_h_;
    payload_ = plane_y_ + 2 * plane_c_;
    if (input_.from_stdin) spool_ = std::make_unique<Spool>(plane_y_ * 3);
  }

  std::optional<Frame> next() override {
    std::string marker;
    if (!read_line(marker, 1024)) {
      if (count_ == 0) throw IngestError("zero frames");
      return std::nullopt;
    }
    if (marker.rfind("FRAME", 0) != 0) {
      throw IngestError("malformed frame marker at frame " + std::to_string(count_));
    }
    if (!input_.from_stdin) offsets_.push_back(input_.file.tellg());
    std::vector<std::uint8_t> raw(payload_);
    if (input_.read(raw.data(), raw.size()) != raw.size()) {
      throw IngestError("truncated frame payload at frame " + std::to_string(count_));
    }
    auto rgb = convert(raw);
    if (spool_) spool_->append(rgb);
    return make_frame(count_++, std::move(rgb));
  }

  Frame read(std::size_t index) override {
    if (index >= count_) throw IngestError("frame " + std::to_string(index) + " not yet read");
    if (spool_) return make_frame(index, spool_->at(index));
    std::vector<std::uint8_t> raw(payload_);
    input_.seek_file.clear();
    input_.seek_file.seekg(offsets_[index]);
    input_.seek_file.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(input_.seek_file.gcount()) != raw.size()) {
      throw IngestError("cannot re-read frame " + std::to_string(index));
    }
    return make_frame(index, convert(raw));
  }

 private:
  bool read_line(std::string& out, std::size_t limit) {
    out.clear();
    char c;
    while (input_.in->get(c)) {
      if (c == '\n') return true;
      out.push_back(c);
      if (out.size() > limit) throw IngestError("malformed header: line too long");
    }
    if (out.empty()) return false;
    throw IngestError("malformed header: unterminated line");
  }

  void parse_header(const std::string& header) {
    std::istringstream tokens(header);
    std::string magic;
    tokens >> magic;
    if (magic != "YUV4MPEG2") throw IngestError("malformed header: missing YUV4MPEG2 magic");
    bool have_fps = false;
    std::string colorspace = "420jpeg";
    for (std::string tok; tokens >> tok;) {
      char tag = tok[0];
      std::string value = tok.substr(1);
      try {
        switch (tag) {
          case 'W': width_ = std::stoi(value); break;
          case 'H': height_ = std::stoi(value); break;
          case 'F': fps_ = parse_fps(value); have_fps = true; break;
          case 'C': colorspace = value; break;
          default: break;  // I, A, X: irrelevant to decoding
        }
      } catch (const std::exception&) {
        throw IngestError("malformed header: bad field '" + tok + "'");
      }
    }
    if (width_ <= 0 || height_ <= 0) throw IngestError("malformed header: missing or invalid W/H");
    if (!have_fps) throw IngestError("malformed header: missing F");
    if (colorspace.rfind("420", 0) == 0 && colorspace.find("p1") == std::string::npos) {
      chroma_w_ = (width_ + 1) / 2;
      chroma_h_ = (height_ + 1) / 2;
    } else if (colorspace == "422") {
      chroma_w_ = (width_ + 1) / 2;
      chroma_h_ = height_;
    } else if (colorspace == "444") {
      chroma_w_ = width_;
      chroma_h_ = height_;
    } else if (colorspace == "mono") {
      chroma_w_ = chroma_h_ = 0;
    } else {
      throw IngestError("malformed header: unsupported colorspace C" + colorspace);
    }
  }

  std::vector<std::uint8_t> convert(const std::vector<std::uint8_t>& raw) const {
    const std::uint8_t* y = raw.data();
    const std::uint8_t* u = chroma_w_ ? y + plane_y_ : nullptr;
    const std::uint8_t* v = chroma_w_ ? u + plane_c_ : nullptr;
    return yuv_to_rgb(y, u, v, width_, height_, chroma_w_, chroma_h_);
  }

  ByteInput input_;
  std::unique_ptr<Spool> spool_;
  std::vector<std::streampos> offsets_;
  int chroma_w_ = 0;
  int chroma_h_ = 0;
  std::size_t plane_y_ = 0;
  std::size_t plane_c_ = 0;
  std::size_t payload_ = 0;
};

class RawRgbReader : public FrameReader {
 public:
  RawRgbReader(const FrameSource& source) : input_(source.locator) {
    if (!source.fps) throw IngestError("rgb24 input requires a frame rate");
    if (source.width <= 0 || source.height <= 0) {
      throw IngestError("rgb24 input requires positive width and height");
    }
    fps_ = *source.fps;
    width_ = source.width;
    height_ = source.height;
    frame_bytes_ = static_cast<std::size_t>(width_) * height_ * 3;
    if (input_.from_stdin) spool_ = std::make_unique<Spool>(frame_bytes_);
  }

  std::optional<Frame> next() override {
    std::vector<std::uint8_t> rgb(frame_bytes_);
    std::size_t got = input_.read(rgb.data(), rgb.size());
    if (got == 0) {
      if (count_ == 0) throw IngestError("zero frames");
      return std::nullopt;
    }
    if (got != rgb.size()) {
      throw IngestError("truncated frame payload at frame " + std::to_string(count_));
    }
    if (spool_) spool_->append(rgb);
    return make_frame(count_++, std::move(rgb));
  }

  Frame read(std::size_t index) override {
    if (index >= count_) throw IngestError("frame " + std::to_string(index) + " not yet read");
    if (spool_) return make_frame(index, spool_->at(index));
    std::vector<std::uint8_t> rgb(frame_bytes_);
    input_.seek_file.clear();
    input_.seek_file.seekg(static_cast<std::streamoff>(index * frame_bytes_));
    input_.seek_file.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (static_cast<std::size_t>(input_.seek_file.gcount()) != rgb.size()) {
      throw IngestError("cannot re-read frame " + std::to_string(index));
    }
    return make_frame(index, std::move(rgb));
  }

 private:
  ByteInput input_;
  std::unique_ptr<Spool> spool_;
  std::size_t frame_bytes_ = 0;
};

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// Width of the trailing digit run of a file stem; 0 when there is none.
std::size_t trailing_digits(const std::string& stem) {
  std::size_t n = 0;
  while (n < stem.size() && std::isdigit(static_cast<unsigned char>(stem[stem.size() - 1 - n]))) ++n;
  return n;
}

class FrameDirReader : public FrameReader {
 public:
  FrameDirReader(const FrameSource& source) {
    if (!source.fps) throw IngestError("frame-dir input requires a frame rate");
    fps_ = *source.fps;
    std::error_code ec;
    if (!fs::is_directory(source.locator, ec)) {
      throw IngestError("cannot open frame directory '" + source.locator + "'");
    }
    for (const auto& entry : fs::directory_iterator(source.locator)) {
      if (entry.is_regular_file() && is_image_file(entry.path())) files_.push_back(entry.path());
    }
    std::sort(files_.begin(), files_.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    // Lexicographic order is only trustworthy with equal-width frame numbers.
    std::size_t width = 0;
    for (const auto& f : files_) {
      std::string stem = f.stem().string();
      std::size_t digits = trailing_digits(stem);
      if (digits == 0 || (width != 0 && digits != width)) {
        throw IngestError("frame-dir names must carry zero-padded frame numbers of equal width: '" +
                          f.filename().string() + "'");
      }
      width = digits;
    }
  }

  std::optional<Frame> next() override {
    if (count_ == files_.size()) {
      if (count_ == 0) throw IngestError("zero frames");
      return std::nullopt;
    }
    RgbImage img = load(count_);
    if (count_ == 0) {
      width_ = img.width;
      height_ = img.height;
    } else if (img.width != width_ || img.height != height_) {
      throw IngestError("mixed image dimensions: '" + files_[count_].filename().string() + "' is " +
                        std::to_string(img.width) + "x" + std::to_string(img.height) + ", expected " +
                        std::to_string(width_) + "x" + std::to_string(height_));
    }
    return make_frame(count_++, std::move(img.pixels));
  }

  Frame read(std::size_t index) override {
    if (index >= count_) throw IngestError("frame " + std::to_string(index) + " not yet read");
    return make_frame(index, load(index).pixels);
  }

 private:
  RgbImage load(std::size_t index) const {
    try {
      return decode_image_file(files_[index]);
    } catch (const ImageError& e) {
      throw IngestError("frame " + std::to_string(index) + ": " + e.what());
    }
  }

  std::vector<fs::path> files_;
};

}  // namespace

std::vector<std::uint8_t> yuv_to_rgb(const std::uint8_t* y, const std::uint8_t* u,
                                     const std::uint8_t* v, int width, int height,
                                     int chroma_w, int chroma_h) {
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * height * 3);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      double luma = y[static_cast<std::size_t>(row) * width + col];
      double cb = 0.0;
      double cr = 0.0;
      if (chroma_w > 0) {
        int crow = static_cast<int>(static_cast<long>(row) * chroma_h / height);
        int ccol = static_cast<int>(static_cast<long>(col) * chroma_w / width);
        std::size_t ci = static_cast<std::size_t>(crow) * chroma_w + ccol;
        cb = u[ci] - 128.0;
        cr = v[ci] - 128.0;
      }
      std::uint8_t* px = &rgb[(static_cast<std::size_t>(row) * width + col) * 3];
      px[0] = clamp_byte(luma + 1.402 * cr);
      px[1] = clamp_byte(luma - 0.344136 * cb - 0.714136 * cr);
      px[2] = clamp_byte(luma + 1.772 * cb);
    }
  }
  return rgb;
}

Frame FrameReader::make_frame(std::size_t index, std::vector<std::uint8_t> pixels) const {
  Frame f;
  f.index = index;
  f.time_s = fps_.time_of(index);
  f.width = width_;
  f.height = height_;
  f.pixels = std::move(pixels);
  return f;
}

std::unique_ptr<FrameReader> FrameReader::open(const FrameSource& source) {
  if (source.fps && !source.fps->valid()) throw IngestError("frame rate must be positive");
  switch (source.kind) {
    case SourceKind::kY4m:
      return std::make_unique<Y4mReader>(source);
    case SourceKind::kRgb24Raw:
      return std::make_unique<RawRgbReader>(source);
    case SourceKind::kFrameDir:
      if (source.locator == "-") throw IngestError("frame-dir input cannot be read from stdin");
      return std::make_unique<FrameDirReader>(source);
  }
  throw IngestError("unknown source kind");
}

std::vector<Frame> ingest_frames(const FrameSource& source) {
  auto reader = FrameReader::open(source);
  std::vector<Frame> frames;
  while (auto f = reader->next()) frames.push_back(std::move(*f));
  return frames;
}

}  // namespace keycap
