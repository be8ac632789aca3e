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

// keycap: caption a long video from a budgeted set of keyframes.
//
// Exit codes: 0 success, 2 bad arguments, 3 input error, 4 captioner error,
// 5 output error.

#include <cstdlib>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "keycap/pipeline.h"

namespace {

enum ExitCode { kOk = 0, kBadArgs = 2, kInputError = 3, kCaptionerError = 4, kOutputError = 5 };

std::size_t parse_cap(const std::string& text) {
  if (text == "inf" || text == "none" || text == "unlimited") return keycap::kUnlimitedCap;
  std::size_t pos = 0;
  unsigned long long v = std::stoull(text, &pos);
  if (pos != text.size()) throw std::invalid_argument("bad --per-shot-cap '" + text + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Caption long videos from a budgeted set of keyframes"};
  app.set_version_flag("--version", "keycap 0.1.0");

  std::string input;
  std::string input_format = "y4m";
  std::string fps_text;
  int width = 0;
  int height = 0;
  std::size_t budget_k = 8;
  double time_budget = 0.0;
  std::string cap_text = "4";
  keycap::ShotParams shot;
  std::string captioner = "stub";
  std::size_t parallel = 4;
  double timeout = 30.0;
  bool refine = false;
  double dup = keycap::kDefaultDupThreshold;
  double conf = keycap::kDefaultConfThreshold;
  std::string out_dir = "out";
  std::string formats = "json";
  std::string cache;
  std::string dump;

  app.add_option("--input", input, "Input path, or - for standard input")->required();
  app.add_option("--input-format", input_format, "y4m, rgb24 or frames")->capture_default_str();
  app.add_option("--fps", fps_text, "Frame rate N or N/D (required for rgb24 and frames)");
  app.add_option("--width", width, "Frame width (rgb24)");
  app.add_option("--height", height, "Frame height (rgb24)");
  auto* k_opt = app.add_option("--budget", budget_k, "Keyframe budget K")->capture_default_str();
  auto* t_opt = app.add_option("--time-budget", time_budget, "Wall-clock budget in seconds");
  k_opt->excludes(t_opt);
  app.add_option("--per-shot-cap", cap_text, "Max keyframes per shot, or inf")->capture_default_str();
  app.add_option("--abs-floor", shot.abs_floor, "Absolute cut threshold")->capture_default_str();
  app.add_option("--window", shot.window, "Trailing window for adaptive threshold")->capture_default_str();
  app.add_option("--sensitivity", shot.sensitivity, "Std-devs above the window mean")->capture_default_str();
  app.add_option("--min-shot", shot.min_shot_len, "Minimum shot length in frames")->capture_default_str();
  app.add_option("--captioner", captioner, "stub, exec:CMD or http:URL")->capture_default_str();
  app.add_option("--parallel", parallel, "Concurrent captioner requests")->capture_default_str();
  app.add_option("--timeout", timeout, "Captioner timeout in seconds")->capture_default_str();
  app.add_flag("--refine", refine, "Add keyframes to shots with failed or low-confidence captions");
  app.add_option("--dup-threshold", dup, "Caption similarity treated as duplicate")->capture_default_str();
  app.add_option("--conf-threshold", conf, "Confidence below which a shot escalates")->capture_default_str();
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", formats, "Comma list of json,vtt,story,keyframes")->capture_default_str();
  app.add_option("--cache", cache, "Caption cache file (KEYCAP_CACHE overrides)");
  app.add_option("--dump-distances", dump, "Write per-boundary distances here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadArgs;
  }

  keycap::PipelineConfig config;
  try {
    config.source.kind = keycap::parse_source_kind(input_format);
    config.source.locator = input;
    if (!fps_text.empty()) config.source.fps = keycap::parse_fps(fps_text);
    config.source.width = width;
    config.source.height = height;
    if (config.source.kind != keycap::SourceKind::kY4m && !config.source.fps) {
      throw std::invalid_argument("--fps is required for " + input_format + " input");
    }
    if (config.source.kind == keycap::SourceKind::kRgb24Raw && (width <= 0 || height <= 0)) {
      throw std::invalid_argument("--width and --height are required for rgb24 input");
    }
    std::size_t cap = parse_cap(cap_text);
    config.budget = t_opt->count() > 0 ? keycap::Budget::time(time_budget, cap) : keycap::Budget::count(budget_k, cap);
    config.shot_params = shot;
    config.captioner = keycap::CaptionerConfig::parse(captioner);
    config.captioner.parallelism = parallel;
    config.captioner.timeout_s = timeout;
    config.refine = refine;
    config.dup_threshold = dup;
    config.conf_threshold = conf;
    config.out_dir = out_dir;
    config.formats = keycap::OutputFormats::parse(formats);
    if (const char* env = std::getenv("KEYCAP_CACHE"); env != nullptr && *env != '\0') {
      config.cache_path = env;
    } else if (!cache.empty()) {
      config.cache_path = cache;
    }
    if (!dump.empty()) config.dump_distances = dump;
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "keycap: " << e.what() << "\n";
    return kBadArgs;
  }

  try {
    keycap::PipelineResult result = keycap::run_pipeline(config);
    keycap::write_outputs(result, config);
    const auto& r = result.report;
    std::fprintf(stderr,
                 "keycap: %zu frames, %zu shots, %zu keyframes (%zu calls, %zu cache hits, %zu failed); "
                 "stage seconds: ingest %.3f shots %.3f budget %.3f caption %.3f refine %.3f narrate %.3f\n",
                 r.n_frames, r.n_shots, r.n_keyframes, r.n_captioner_calls, r.n_cache_hits, r.n_failed,
                 r.times.ingest_s, r.times.shots_s, r.times.budget_s, r.times.caption_s, r.times.refine_s,
                 r.times.narrate_s);
  } catch (const keycap::IngestError& e) {
    std::cerr << "keycap: input error: " << e.what() << "\n";
    return kInputError;
  } catch (const keycap::CaptionError& e) {
    std::cerr << "keycap: captioner error: " << e.what() << "\n";
    return kCaptionerError;
  } catch (const keycap::OutputError& e) {
    std::cerr << "keycap: output error: " << e.what() << "\n";
    return kOutputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "keycap: " << e.what() << "\n";
    return kBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "keycap: error: " << e.what() << "\n";
    return kOutputError;
  }
  return kOk;
}
