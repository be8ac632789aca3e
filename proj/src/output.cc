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

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "keycap/fileutil.h"
#include "keycap/image_io.h"
#include "keycap/pipeline.h"

namespace keycap {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void atomic_write_file(const fs::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw std::runtime_error("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

std::string vtt_timestamp(double seconds) {
  long long ms = std::llround(seconds * 1000.0);
  if (ms < 0) ms = 0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld.%03lld", ms / 3600000, (ms / 60000) % 60, (ms / 1000) % 60,
                ms % 1000);
  return buf;
}

std::string render_vtt(std::span<const TimelineEntry> timeline) {
  std::string out = "WEBVTT\n";
  for (const auto& e : timeline) {
    out += "\n" + vtt_timestamp(e.start_s) + " --> " + vtt_timestamp(e.end_s) + "\n";
    out += e.text + "\n";
  }
  return out;
}

std::string render_json(const PipelineResult& result) {
  const VideoDescription& d = result.description;
  const RunReport& r = result.report;
  const double period = r.n_frames == 0 ? 0.0 : d.duration_s / static_cast<double>(r.n_frames);

  ordered_json doc = ordered_json::object();
  doc["title"] = d.title;
  doc["abstract"] = d.abstract;

  ordered_json shots = ordered_json::array();
  for (const auto& s : d.shots) {
    ordered_json o = ordered_json::object();
    o["id"] = s.id;
    o["start"] = s.start;
    o["end"] = s.end;
    o["start_s"] = static_cast<double>(s.start) * period;
    o["end_s"] = static_cast<double>(s.end + 1) * period;
    shots.push_back(std::move(o));
  }
  doc["shots"] = std::move(shots);

  ordered_json keyframes = ordered_json::array();
  for (const auto& ck : d.captions) {
    ordered_json o = ordered_json::object();
    o["frame_index"] = ck.keyframe.frame_index;
    o["shot_id"] = ck.keyframe.shot_id;
    o["rank"] = ck.keyframe.rank;
    o["time_s"] = ck.time_s;
    if (ck.ok()) {
      o["caption"] = ck.caption->text;
      o["confidence"] = ck.caption->confidence ? ordered_json(*ck.caption->confidence) : ordered_json(nullptr);
      o["model_id"] = ck.caption->model_id;
    } else {
      o["error"] = ck.error;
    }
    keyframes.push_back(std::move(o));
  }
  doc["keyframes"] = std::move(keyframes);

  ordered_json timeline = ordered_json::array();
  for (const auto& e : d.timeline) {
    ordered_json o = ordered_json::object();
    o["start_s"] = e.start_s;
    o["end_s"] = e.end_s;
    o["text"] = e.text;
    o["source_keyframes"] = e.source_keyframes;
    timeline.push_back(std::move(o));
  }
  doc["timeline"] = std::move(timeline);

  // Wall times vary run to run and stay out of the artifact.
  ordered_json report = ordered_json::object();
  report["n_frames"] = r.n_frames;
  report["n_shots"] = r.n_shots;
  report["n_keyframes"] = r.n_keyframes;
  report["n_captioner_calls"] = r.n_captioner_calls;
  report["n_cache_hits"] = r.n_cache_hits;
  report["n_failed"] = r.n_failed;
  report["n_escalations"] = r.n_escalations;
  report["budget_k"] = r.budget_k;
  doc["report"] = std::move(report);
  return doc.dump(2) + "\n";
}

std::vector<fs::path> write_outputs(const PipelineResult& result, const PipelineConfig& config) {
  std::vector<fs::path> written;
  auto rollback = [&] {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
  };
  try {
    fs::create_directories(config.out_dir);
    auto put = [&](const fs::path& p, std::string_view content) {
      atomic_write_file(p, content);
      written.push_back(p);
    };
    if (config.formats.json) put(config.out_dir / "description.json", render_json(result));
    if (config.formats.vtt) put(config.out_dir / "captions.vtt", render_vtt(result.description.timeline));
    if (config.formats.story) put(config.out_dir / "story.txt", result.description.story);
    if (config.formats.keyframes) {
      fs::path dir = config.out_dir / "keyframes";
      fs::create_directories(dir);
      for (const auto& ck : result.description.captions) {
        const Frame& f = result.keyframe_frames.at(ck.keyframe.frame_index);
        auto png = encode_png(f.width, f.height, f.pixels);
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06zu.png", ck.keyframe.frame_index);
        put(dir / name, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
      }
    }
  } catch (const std::exception& e) {
    rollback();
    throw OutputError("cannot write outputs to '" + config.out_dir.string() + "': " + e.what());
  }
  return written;
}

}  // namespace keycap
