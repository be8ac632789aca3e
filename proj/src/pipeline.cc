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

#include "keycap/pipeline.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "keycap/fileutil.h"
#include "keycap/hash.h"

namespace keycap {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void check_threshold(double v, const char* name) {
  if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in (0, 1]");
}

}  // namespace

OutputFormats OutputFormats::parse(const std::string& list) {
  OutputFormats f{false, false, false, false};
  std::istringstream in(list);
  for (std::string item; std::getline(in, item, ',');) {
    if (item == "json") {
      f.json = true;
    } else if (item == "vtt") {
      f.vtt = true;
    } else if (item == "story") {
      f.story = true;
    } else if (item == "keyframes") {
      f.keyframes = true;
    } else {
      throw std::invalid_argument("unknown output format '" + item + "'");
    }
  }
  if (!f.any()) throw std::invalid_argument("at least one output format is required");
  return f;
}

void PipelineConfig::validate() const {
  shot_params.validate();
  budget.validate();
  captioner.validate();
  check_threshold(dup_threshold, "duplicate threshold");
  check_threshold(conf_threshold, "confidence threshold");
  if (!formats.any()) throw std::invalid_argument("at least one output format is required");
}

PipelineResult run_pipeline(const PipelineConfig& config, CaptionBackend* backend) {
  config.validate();
  const auto started = Clock::now();
  PipelineResult result;
  RunReport& report = result.report;
  VideoDescription& desc = result.description;

  // Signatures and distances in one streaming pass.
  auto t = Clock::now();
  auto reader = FrameReader::open(config.source);
  std::vector<Signature> signatures;
  while (auto frame = reader->next()) signatures.push_back(frame_signature(*frame));
  auto series = distance_series(signatures);
  report.n_frames = signatures.size();
  desc.duration_s = static_cast<double>(report.n_frames) * reader->fps().period();
  if (config.dump_distances) {
    std::ostringstream dump;
    write_distance_dump(dump, series);
    try {
      atomic_write_file(*config.dump_distances, dump.str());
    } catch (const std::exception& e) {
      throw OutputError("cannot write distance dump: " + std::string(e.what()));
    }
  }
  report.times.ingest_s = seconds_since(t);

  t = Clock::now();
  desc.shots = detect_shots(series, report.n_frames, config.shot_params);
  report.n_shots = desc.shots.size();
  report.times.shots_s = seconds_since(t);

  std::unique_ptr<CaptionBackend> owned;
  if (backend == nullptr) {
    owned = make_backend(config.captioner);
    backend = owned.get();
  }
  CaptionCache cache;
  if (config.cache_path) cache.load(*config.cache_path);
  auto fetch = [&](std::size_t index) { return reader->read(index); };

  t = Clock::now();
  Budget budget = config.budget;
  std::optional<Keyframe> probe;
  if (budget.mode == BudgetMode::kTime) {
    Calibration cal = calibrate_time_budget(budget, desc.shots, signatures, fetch, *backend, cache, started);
    budget = cal.budget;
    probe = cal.probe;
    report.n_captioner_calls += 1;
  }
  report.budget_k = budget.k;
  std::vector<std::size_t> counts = allocate_budget(desc.shots, budget);
  std::vector<Keyframe> keyframes = select_keyframes(desc.shots, signatures, counts);
  report.times.budget_s = seconds_since(t);

  auto caption_batch = [&](const std::vector<Keyframe>& batch) {
    std::vector<KeyframeJob> jobs;
    for (const auto& kf : batch) {
      Frame frame = reader->read(kf.frame_index);
      result.keyframe_frames.emplace(kf.frame_index, frame);
      jobs.push_back({kf, std::move(frame)});
    }
    CaptionStats stats;
    auto captioned = caption_keyframes(*backend, cache, jobs, config.captioner.parallelism, &stats);
    report.n_captioner_calls += stats.calls;
    report.n_cache_hits += stats.hits;
    desc.captions.insert(desc.captions.end(), captioned.begin(), captioned.end());
  };

  t = Clock::now();
  caption_batch(keyframes);
  if (probe) {
    // The probe's own call already counted; its reuse is not a second hit.
    bool reused = std::any_of(keyframes.begin(), keyframes.end(),
                              [&](const Keyframe& k) { return k.frame_index == probe->frame_index; });
    if (reused && report.n_cache_hits > 0) --report.n_cache_hits;
  }
  report.times.caption_s = seconds_since(t);

  t = Clock::now();
  if (config.refine) {
    for (;;) {
      std::vector<Keyframe> extra;
      for (std::size_t s = 0; s < desc.shots.size(); ++s) {
        const Shot& shot = desc.shots[s];
        if (counts[s] == 0 || counts[s] >= std::min(shot.length(), budget.per_shot_cap)) continue;
        std::vector<CaptionedKeyframe> attempts;
        for (const auto& ck : desc.captions) {
          if (ck.keyframe.shot_id == shot.id) attempts.push_back(ck);
        }
        if (!needs_escalation(attempts, config.conf_threshold)) continue;
        ++counts[s];
        for (const auto& kf : select_shot_keyframes(shot, signatures, counts[s])) {
          if (kf.rank + 1 == counts[s]) extra.push_back(kf);
        }
      }
      if (extra.empty()) break;
      std::sort(extra.begin(), extra.end(),
                [](const Keyframe& a, const Keyframe& b) { return a.frame_index < b.frame_index; });
      caption_batch(extra);
      report.n_escalations += extra.size();
      ++report.n_refine_rounds;
    }
  }
  std::sort(desc.captions.begin(), desc.captions.end(), [](const CaptionedKeyframe& a, const CaptionedKeyframe& b) {
    return a.keyframe.frame_index < b.keyframe.frame_index;
  });
  report.times.refine_s = seconds_since(t);
  report.n_keyframes = desc.captions.size();
  report.n_failed = static_cast<std::size_t>(
      std::count_if(desc.captions.begin(), desc.captions.end(), [](const CaptionedKeyframe& c) { return !c.ok(); }));

  if (config.cache_path) cache.save(*config.cache_path);

  t = Clock::now();
  std::vector<Caption> ordered;
  for (const auto& ck : desc.captions) {
    if (ck.ok()) ordered.push_back(*ck.caption);
  }
  if (ordered.empty()) {
    const auto& first = desc.captions.front();
    throw CaptionError(backend->name(), first.keyframe.frame_index,
                       "no keyframe was captioned successfully; first error: " + first.error);
  }
  auto deduped = dedup_captions(ordered, config.dup_threshold);
  desc.abstract = compose_abstract(deduped);
  try {
    desc.title = generate_title(deduped);
  } catch (const NarrationError&) {
    desc.title.clear();  // stopword-only captions: no title, the rest still stands
  }
  auto story = build_activity_story(desc.captions, desc.shots, desc.duration_s, config.dup_threshold);
  desc.timeline = std::move(story.entries);
  desc.story = std::move(story.text);
  report.times.narrate_s = seconds_since(t);
  return result;
}

}  // namespace keycap
