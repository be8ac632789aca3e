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

#include "keycap/captioner.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "backends.h"
#include "keycap/fileutil.h"
#include "keycap/hash.h"

namespace keycap {

using json = nlohmann::json;

CaptionerConfig CaptionerConfig::parse(const std::string& spec) {
  CaptionerConfig config;
  if (spec == "stub") {
    config.backend = BackendKind::kStub;
  } else if (spec.rfind("exec:", 0) == 0) {
    config.backend = BackendKind::kExec;
    config.endpoint = spec.substr(5);
  } else if (spec.rfind("http:", 0) == 0 || spec.rfind("https:", 0) == 0) {
    config.backend = BackendKind::kHttp;
    std::string rest = spec.substr(spec.find(':') + 1);
    if (rest.rfind("//", 0) == 0) {
      config.endpoint = spec;  // plain URL
    } else if (rest.rfind("http://", 0) == 0 || rest.rfind("https://", 0) == 0) {
      config.endpoint = rest;
    } else {
      config.endpoint = "http://" + rest;
    }
  } else {
    throw std::invalid_argument("captioner must be stub, exec:CMD or http:URL, got '" + spec + "'");
  }
  config.validate();
  return config;
}

void CaptionerConfig::validate() const {
  if (parallelism < 1) throw std::invalid_argument("captioner parallelism must be at least 1");
  if (!(timeout_s > 0.0)) throw std::invalid_argument("captioner timeout must be positive");
  if (retries < 0) throw std::invalid_argument("captioner retries must be non-negative");
  if (backend != BackendKind::kStub && endpoint.empty()) {
    throw std::invalid_argument("captioner endpoint is empty");
  }
}

CaptionError::CaptionError(std::string backend, std::size_t frame_index, std::string cause)
    : std::runtime_error(backend + " captioner failed on frame " + std::to_string(frame_index) + ": " + cause),
      backend_(std::move(backend)),
      frame_index_(frame_index),
      cause_(std::move(cause)) {}

void validate_caption(const Caption& caption, const std::string& backend, std::size_t frame_index) {
  if (caption.text.empty()) throw CaptionError(backend, frame_index, "malformed response: empty caption");
  if (caption.confidence) {
    double c = *caption.confidence;
    if (!std::isfinite(c) || c < 0.0 || c > 1.0) {
      throw CaptionError(backend, frame_index, "malformed response: confidence outside [0, 1]");
    }
  }
}

Caption StubBackend::caption(const Frame& frame) {
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
  return {"stub caption " + short_hex(fnv1a64(frame.pixels)), 1.0, "stub-v1"};
}

std::unique_ptr<CaptionBackend> make_backend(const CaptionerConfig& config) {
  config.validate();
  switch (config.backend) {
    case BackendKind::kStub:
      return std::make_unique<StubBackend>();
    case BackendKind::kExec:
      return internal::make_exec_backend(config);
    case BackendKind::kHttp:
      return internal::make_http_backend(config);
  }
  throw std::invalid_argument("unknown captioner backend");
}

void CaptionCache::insert(const Key& key, const Caption& caption) {
  std::lock_guard lock(mu_);
  entries_[key] = caption;
}

std::optional<Caption> CaptionCache::find(const Key& key) const {
  std::lock_guard lock(mu_);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  return std::nullopt;
}

std::size_t CaptionCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void CaptionCache::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return;
  json doc;
  try {
    doc = json::parse(in);
    std::lock_guard lock(mu_);
    for (const auto& e : doc.at("entries")) {
      Key key{e.at("model_id").get<std::string>(), std::stoull(e.at("pixel_hash").get<std::string>(), nullptr, 16)};
      Caption c;
      c.text = e.at("caption").get<std::string>();
      if (e.contains("confidence") && !e["confidence"].is_null()) c.confidence = e["confidence"].get<double>();
      c.model_id = e.value("caption_model_id", key.model_id);
      entries_[key] = std::move(c);
    }
  } catch (const std::exception& e) {
    throw std::runtime_error("corrupt caption cache '" + path.string() + "': " + e.what());
  }
}

void CaptionCache::save(const std::filesystem::path& path) const {
  json entries = json::array();
  {
    std::lock_guard lock(mu_);
    for (const auto& [key, c] : entries_) {
      json e = json::object();
      e["model_id"] = key.model_id;
      e["pixel_hash"] = hex16(key.pixel_hash);
      e["caption"] = c.text;
      e["confidence"] = c.confidence ? json(*c.confidence) : json(nullptr);
      e["caption_model_id"] = c.model_id;
      entries.push_back(std::move(e));
    }
  }
  json doc = {{"version", 1}, {"entries", std::move(entries)}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  atomic_write_file(path, doc.dump(2) + "\n");
}

std::vector<CaptionedKeyframe> caption_keyframes(CaptionBackend& backend, CaptionCache& cache,
                                                 std::span<const KeyframeJob> jobs, std::size_t parallelism,
                                                 CaptionStats* stats) {
  std::vector<CaptionedKeyframe> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> calls{0};
  std::atomic<std::size_t> hits{0};
  std::atomic<std::size_t> failures{0};
  const std::string model = backend.model_id();

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const KeyframeJob& job = jobs[i];
      CaptionedKeyframe& out = results[i];
      out.keyframe = job.keyframe;
      out.time_s = job.frame.time_s;
      try {
        auto lookup = cache.get_or_compute({model, fnv1a64(job.frame.pixels)}, [&] {
          ++calls;
          Caption c = backend.caption(job.frame);
          validate_caption(c, backend.name(), job.keyframe.frame_index);
          return c;
        });
        if (lookup.hit) ++hits;
        out.caption = std::move(lookup.caption);
      } catch (const std::exception& e) {
        ++failures;
        out.error = e.what();
      }
    }
  };

  const std::size_t threads = std::min(std::max<std::size_t>(parallelism, 1), jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::stable_sort(results.begin(), results.end(), [](const CaptionedKeyframe& a, const CaptionedKeyframe& b) {
    return a.keyframe.frame_index < b.keyframe.frame_index;
  });
  if (stats) {
    stats->calls += calls;
    stats->hits += hits;
    stats->failures += failures;
  }
  return results;
}

}  // namespace keycap
