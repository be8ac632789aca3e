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

#ifndef KEYCAP_CAPTIONER_H_
#define KEYCAP_CAPTIONER_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "keycap/frame.h"
#include "keycap/keyframe.h"

namespace keycap {

struct Caption {
  std::string text;
  std::optional<double> confidence;
  std::string model_id;

  /// Absent confidence counts as certain.
  double effective_confidence() const { return confidence.value_or(1.0); }
  bool operator==(const Caption&) const = default;
};

/// A keyframe with its caption, or the error that prevented one.
struct CaptionedKeyframe {
  Keyframe keyframe;
  double time_s = 0.0;
  std::optional<Caption> caption;
  std::string error;

  bool ok() const { return caption.has_value(); }
};

enum class BackendKind { kStub, kExec, kHttp };

struct CaptionerConfig {
  BackendKind backend = BackendKind::kStub;
  std::string endpoint;  // command line (exec) or base URL (http)
  double timeout_s = 30.0;
  std::size_t parallelism = 4;
  int retries = 2;

  /// "stub", "exec:CMD" or "http:URL".
  static CaptionerConfig parse(const std::string& spec);
  void validate() const;
};

class CaptionError : public std::runtime_error {
 public:
  CaptionError(std::string backend, std::size_t frame_index, std::string cause);

  const std::string& backend() const { return backend_; }
  std::size_t frame_index() const { return frame_index_; }
  const std::string& cause() const { return cause_; }

 private:
  std::string backend_;
  std::size_t frame_index_;
  std::string cause_;
};

// An image-captioning service. caption() must be safe to call from several
// threads at once; it throws CaptionError on timeout, transport failure, or
// a response that violates the Caption invariants.
class CaptionBackend {
 public:
  virtual ~CaptionBackend() = default;
  /// "stub", "exec" or "http"; used in error reports.
  virtual std::string name() const = 0;
  /// Identity of the model behind the backend; half of the cache key.
  virtual std::string model_id() const = 0;
  virtual Caption caption(const Frame& frame) = 0;
};

/// Rejects empty text or confidence outside [0, 1].
void validate_caption(const Caption& caption, const std::string& backend, std::size_t frame_index);

/// Deterministic offline backend: "stub caption <8 hex of FNV-1a(pixels)>".
class StubBackend : public CaptionBackend {
 public:
  explicit StubBackend(std::chrono::milliseconds delay = std::chrono::milliseconds{0}) : delay_(delay) {}
  std::string name() const override { return "stub"; }
  std::string model_id() const override { return "stub-v1"; }
  Caption caption(const Frame& frame) override;

 private:
  std::chrono::milliseconds delay_;
};

std::unique_ptr<CaptionBackend> make_backend(const CaptionerConfig& config);

// Content-addressed caption store keyed by (model_id, pixel hash).
//
// Concurrent requests for the same key share one backend call. Failures are
// not cached. load()/save() persist entries as a JSON sidecar.
class CaptionCache {
 public:
  struct Key {
    std::string model_id;
    std::uint64_t pixel_hash = 0;
    auto operator<=>(const Key&) const = default;
  };

  struct Lookup {
    Caption caption;
    bool hit = false;
  };

  template <typename Compute>
  Lookup get_or_compute(const Key& key, Compute&& compute);

  void insert(const Key& key, const Caption& caption);
  std::optional<Caption> find(const Key& key) const;
  std::size_t size() const;

  /// Missing file is not an error; a corrupt one is (std::runtime_error).
  void load(const std::filesystem::path& path);
  /// Atomic write (temp file + rename).
  void save(const std::filesystem::path& path) const;

 private:
  mutable std::mutex mu_;
  std::map<Key, Caption> entries_;
  std::map<Key, std::shared_future<Caption>> in_flight_;
};

struct CaptionStats {
  std::size_t calls = 0;
  std::size_t hits = 0;
  std::size_t failures = 0;
};

struct KeyframeJob {
  Keyframe keyframe;
  Frame frame;
};

// Captions each job, at most `parallelism` at a time. Cache hits make no
// backend call. A failing keyframe carries its error and the rest continue.
// Results are sorted by frame index regardless of completion order.
std::vector<CaptionedKeyframe> caption_keyframes(CaptionBackend& backend, CaptionCache& cache,
                                                 std::span<const KeyframeJob> jobs, std::size_t parallelism,
                                                 CaptionStats* stats = nullptr);

template <typename Compute>
CaptionCache::Lookup CaptionCache::get_or_compute(const Key& key, Compute&& compute) {
  std::promise<Caption> promise;
  {
    std::unique_lock lock(mu_);
    if (auto it = entries_.find(key); it != entries_.end()) return {it->second, true};
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      auto pending = it->second;
      lock.unlock();
      return {pending.get(), true};
    }
    in_flight_.emplace(key, promise.get_future().share());
  }
  try {
    Caption result = compute();
    std::lock_guard lock(mu_);
    entries_[key] = result;
    in_flight_.erase(key);
    promise.set_value(result);
    return {std::move(result), false};
  } catch (...) {
    std::lock_guard lock(mu_);
    in_flight_.erase(key);
    promise.set_exception(std::current_exception());
    throw;
  }
}

}  // namespace keycap

#endif  // KEYCAP_CAPTIONER_H_
