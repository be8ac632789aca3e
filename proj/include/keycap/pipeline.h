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

#ifndef KEYCAP_PIPELINE_H_
#define KEYCAP_PIPELINE_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "keycap/captioner.h"
#include "keycap/ingest.h"
#include "keycap/keyframe.h"
#include "keycap/narrate.h"
#include "keycap/shotdetect.h"

namespace keycap {

struct OutputFormats {
  bool json = true;
  bool vtt = false;
  bool story = false;
  bool keyframes = false;

  /// Comma-separated subset of json,vtt,story,keyframes.
  static OutputFormats parse(const std::string& list);
  bool any() const { return json || vtt || story || keyframes; }
};

struct PipelineConfig {
  FrameSource source;
  ShotParams shot_params;
  Budget budget;
  CaptionerConfig captioner;
  bool refine = false;
  double dup_threshold = kDefaultDupThreshold;
  double conf_threshold = kDefaultConfThreshold;
  std::filesystem::path out_dir = "out";
  OutputFormats formats;
  std::optional<std::filesystem::path> cache_path;
  std::optional<std::filesystem::path> dump_distances;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct StageTimes {
  double ingest_s = 0.0;  // decode + signatures + distances
  double shots_s = 0.0;
  double budget_s = 0.0;  // calibration, allocation and selection
  double caption_s = 0.0;
  double refine_s = 0.0;
  double narrate_s = 0.0;
};

// Counters for one run. n_captioner_calls + n_cache_hits equals the number
// of keyframes captioned; the time-budget probe counts as its keyframe's call.
struct RunReport {
  std::size_t n_frames = 0;
  std::size_t n_shots = 0;
  std::size_t n_keyframes = 0;
  std::size_t n_captioner_calls = 0;
  std::size_t n_cache_hits = 0;
  std::size_t n_failed = 0;
  std::size_t n_escalations = 0;  // keyframes added by refine rounds
  std::size_t n_refine_rounds = 0;
  std::size_t budget_k = 0;       // count budget after calibration
  StageTimes times;
};

struct VideoDescription {
  std::string title;
  std::string abstract;
  std::vector<Shot> shots;
  std::vector<CaptionedKeyframe> captions;  // by frame index
  std::vector<TimelineEntry> timeline;
  std::string story;
  double duration_s = 0.0;
};

struct PipelineResult {
  VideoDescription description;
  RunReport report;
  std::map<std::size_t, Frame> keyframe_frames;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ingest -> signatures -> shots -> budget -> captions -> refine -> narrate.
//
// `backend` replaces the configured captioner when non-null (tests inject
// instrumented mocks this way). Throws IngestError, CaptionError (including
// when no keyframe could be captioned), or std::invalid_argument.
PipelineResult run_pipeline(const PipelineConfig& config, CaptionBackend* backend = nullptr);

/// Deterministic JSON document: title, abstract, shots, keyframes, timeline, report.
std::string render_json(const PipelineResult& result);
/// WebVTT with one cue per timeline entry.
std::string render_vtt(std::span<const TimelineEntry> timeline);
/// "HH:MM:SS.mmm"
std::string vtt_timestamp(double seconds);

// Writes the requested artifacts into config.out_dir (created if missing):
// description.json, captions.vtt, story.txt, keyframes/frame_%06d.png. Each
// file is written atomically; on failure the files this call already wrote
// are removed and OutputError is thrown. Returns the written paths.
std::vector<std::filesystem::path> write_outputs(const PipelineResult& result, const PipelineConfig& config);

}  // namespace keycap

#endif  // KEYCAP_PIPELINE_H_
