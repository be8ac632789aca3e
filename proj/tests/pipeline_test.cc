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

#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "keycap/hash.h"
#include "keycap/image_io.h"
#include "keycap/pipeline.h"
#include "test_support.h"

namespace keycap {
namespace {

namespace fs = std::filesystem;
using testing::ShotKind;
using testing::TempDir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

testing::SyntheticVideo two_shot_video() {
  return testing::make_video({{ShotKind::kSolid, {200, 30, 30}, 50}, {ShotKind::kSolid, {30, 30, 200}, 50}}, 1, 8,
                             6);
}

PipelineConfig base_config(const FrameSource& src, const fs::path& out) {
  PipelineConfig c;
  c.source = src;
  c.out_dir = out;
  return c;
}

// Stub-like captions with a confidence fixed per frame range; counts calls
// per frame index.
class ForcedConfidenceBackend : public CaptionBackend {
 public:
  ForcedConfidenceBackend(std::size_t low_first, std::size_t low_last, double low)
      : low_first_(low_first), low_last_(low_last), low_(low) {}
  std::string name() const override { return "forced"; }
  std::string model_id() const override { return "forced-v1"; }
  Caption caption(const Frame& f) override {
    std::lock_guard lock(mu);
    ++calls[f.index];
    double conf = f.index >= low_first_ && f.index <= low_last_ ? low_ : 0.9;
    return {"frame " + short_hex(fnv1a64(f.pixels)) + " seen", conf, "forced-v1"};
  }
  std::mutex mu;
  std::map<std::size_t, int> calls;

 private:
  std::size_t low_first_;
  std::size_t low_last_;
  double low_;
};

TEST_CASE("two-shot golden run") {
  TempDir dir;
  auto video = two_shot_video();
  auto cfg = base_config(testing::rgb24_source(video, dir / "v.rgb"), dir / "out");
  cfg.budget.k = 2;

  auto result = run_pipeline(cfg);
  std::string json_text = render_json(result);
  CHECK(json_text == slurp(fs::path(KEYCAP_GOLDEN_DIR) / "two_shot.json"));

  auto doc = nlohmann::ordered_json::parse(json_text);
  std::vector<std::string> keys;
  for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"title", "abstract", "shots", "keyframes", "timeline", "report"});
  CHECK(doc["shots"].size() == 2);
  CHECK(doc["keyframes"].size() == 2);
  CHECK(doc["report"]["n_captioner_calls"] == 2);
  std::string abstract = doc["abstract"];
  CHECK(std::count(abstract.begin(), abstract.end(), '.') == 2);
  CHECK(json_text.back() == '\n');

  CHECK(render_json(run_pipeline(cfg)) == json_text);
}

TEST_CASE("full-frame mode") {
  TempDir dir;
  auto video = testing::make_video({{ShotKind::kNoise, {100, 100, 100}, 10}}, 5, 8, 6);
  auto cfg = base_config(testing::rgb24_source(video, dir / "v.rgb"), dir / "out");
  cfg.budget.k = 10;
  cfg.budget.per_shot_cap = kUnlimitedCap;
  auto result = run_pipeline(cfg);
  CHECK(result.report.n_shots == 1);
  CHECK(result.report.n_keyframes == 10);
  CHECK(result.report.n_captioner_calls + result.report.n_cache_hits == 10);
  CHECK(result.report.n_captioner_calls == 10);
}

TEST_CASE("refine escalates only the low-confidence shot") {
  TempDir dir;
  auto video = testing::make_video({{ShotKind::kNoise, {200, 40, 40}, 30},
                                    {ShotKind::kNoise, {40, 200, 40}, 30},
                                    {ShotKind::kNoise, {40, 40, 200}, 30}},
                                   9, 16, 12);
  auto cfg = base_config(testing::rgb24_source(video, dir / "v.rgb"), dir / "out");
  cfg.budget.k = 3;
  cfg.refine = true;

  SUBCASE("a uniformly low shot escalates to its cap") {
    ForcedConfidenceBackend mock(30, 59, 0.3);
    auto result = run_pipeline(cfg, &mock);
    std::map<std::size_t, int> per_shot;
    for (const auto& ck : result.description.captions) ++per_shot[ck.keyframe.shot_id];
    CHECK(per_shot[0] == 1);
    CHECK(per_shot[2] == 1);
    CHECK(per_shot[1] == cfg.budget.per_shot_cap);
    CHECK(result.report.n_escalations == cfg.budget.per_shot_cap - 1);
    CHECK(result.report.n_refine_rounds == cfg.budget.per_shot_cap - 1);
    for (const auto& [frame, n] : mock.calls) CHECK(n == 1);
  }
  SUBCASE("escalation stops once a confident caption appears") {
    // Rank 0 of shot 1 sits in the low range; the first farthest-point pick does not.
    ForcedConfidenceBackend mock(30, 59, 0.3);
    auto probe = run_pipeline(cfg, &mock);
    std::size_t rank0 = 0;
    std::size_t rank1 = 0;
    for (const auto& ck : probe.description.captions) {
      if (ck.keyframe.shot_id == 1 && ck.keyframe.rank == 0) rank0 = ck.keyframe.frame_index;
      if (ck.keyframe.shot_id == 1 && ck.keyframe.rank == 1) rank1 = ck.keyframe.frame_index;
    }
    REQUIRE(rank0 != rank1);
    ForcedConfidenceBackend only_rank0(rank0, rank0, 0.3);
    auto result = run_pipeline(cfg, &only_rank0);
    CHECK(result.report.n_keyframes == 4);
    CHECK(result.report.n_escalations == 1);
    CHECK(result.report.n_refine_rounds == 1);
  }
  SUBCASE("no refine, no extras") {
    cfg.refine = false;
    ForcedConfidenceBackend mock(30, 59, 0.3);
    auto result = run_pipeline(cfg, &mock);
    CHECK(result.report.n_keyframes == 3);
    CHECK(result.report.n_escalations == 0);
  }
}

TEST_CASE("pipeline errors") {
  TempDir dir;
  auto video = two_shot_video();
  auto src = testing::rgb24_source(video, dir / "v.rgb");

  SUBCASE("missing input") {
    auto cfg = base_config(src, dir / "out");
    cfg.source.locator = (dir / "nope.rgb").string();
    CHECK_THROWS_AS(run_pipeline(cfg), IngestError);
  }
  SUBCASE("every caption fails") {
    auto cfg = base_config(src, dir / "out");
    cfg.captioner = CaptionerConfig::parse("exec:exit 7");
    cfg.captioner.retries = 0;
    CHECK_THROWS_AS(run_pipeline(cfg), CaptionError);
  }
  SUBCASE("invalid config") {
    auto cfg = base_config(src, dir / "out");
    cfg.dup_threshold = 0.0;
    CHECK_THROWS_AS(run_pipeline(cfg), std::invalid_argument);
  }
}

TEST_CASE("vtt rendering") {
  CHECK(vtt_timestamp(0.0) == "00:00:00.000");
  CHECK(vtt_timestamp(90.0) == "00:01:30.000");
  CHECK(vtt_timestamp(3725.4567) == "01:02:05.457");
  std::vector<TimelineEntry> t{{0.0, 90.0, "a person running", {}}};
  CHECK(render_vtt(t) == "WEBVTT\n\n00:00:00.000 --> 00:01:30.000\na person running\n");
}

TEST_CASE("write_outputs") {
  TempDir dir;
  auto video = two_shot_video();
  auto cfg = base_config(testing::rgb24_source(video, dir / "v.rgb"), dir / "nested" / "out");
  cfg.budget.k = 2;
  cfg.formats = OutputFormats::parse("json,vtt,story,keyframes");
  auto result = run_pipeline(cfg);

  auto written = write_outputs(result, cfg);
  CHECK(written.size() == 5);
  CHECK(fs::is_directory(cfg.out_dir));
  std::map<fs::path, std::string> first;
  for (const auto& p : written) first[p] = slurp(p);
  CHECK(first[cfg.out_dir / "story.txt"] == result.description.story);
  CHECK(first[cfg.out_dir / "captions.vtt"].rfind("WEBVTT\n", 0) == 0);

  for (const auto& ck : result.description.captions) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu.png", ck.keyframe.frame_index);
    auto png = slurp(cfg.out_dir / "keyframes" / name);
    auto img = decode_png(std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()));
    CHECK(img.pixels == video.frames[ck.keyframe.frame_index].pixels);
  }

  write_outputs(result, cfg);
  for (const auto& [p, content] : first) CHECK(slurp(p) == content);
  for (const auto& e : fs::directory_iterator(cfg.out_dir)) {
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
  }

  CHECK_THROWS_AS(OutputFormats::parse("json,gif"), std::invalid_argument);
  CHECK_THROWS_AS(OutputFormats::parse(""), std::invalid_argument);
}

TEST_CASE("write_outputs into a read-only directory") {
  if (geteuid() == 0) {
    MESSAGE("running as root; permission bits are not enforced, using a file in place of the directory");
  }
  TempDir dir;
  auto video = two_shot_video();
  auto cfg = base_config(testing::rgb24_source(video, dir / "v.rgb"), dir / "out");
  cfg.formats = OutputFormats::parse("json,story");
  auto result = run_pipeline(cfg);
  if (geteuid() == 0) {
    std::ofstream(dir / "blocker") << "x";
    cfg.out_dir = dir / "blocker" / "out";
  } else {
    fs::create_directories(cfg.out_dir);
    fs::permissions(cfg.out_dir, fs::perms::owner_read | fs::perms::owner_exec);
  }
  CHECK_THROWS_AS(write_outputs(result, cfg), OutputError);
  if (geteuid() != 0) {
    CHECK(fs::is_empty(cfg.out_dir));
  }
}

// ---- CLI -----------------------------------------------------------------

int run_cli(const std::string& args, const std::string& env = "") {
  std::string cmd = env + " " + KEYCAP_BIN + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

TEST_CASE("cli exit codes") {
  TempDir dir;
  auto video = two_shot_video();
  testing::write_rgb24(dir / "v.rgb", video.frames);
  const std::string input = "--input " + (dir / "v.rgb").string() + " --input-format rgb24 --fps 25 --width 8 --height 6";
  const std::string out = " --out " + (dir / "out").string();

  CHECK(run_cli(input + out + " --budget 2 --format json,vtt,story") == 0);
  CHECK(fs::exists(dir / "out" / "description.json"));
  CHECK(fs::exists(dir / "out" / "captions.vtt"));
  CHECK(fs::exists(dir / "out" / "story.txt"));

  CHECK(run_cli("") == 2);
  CHECK(run_cli(input + out + " --budget 0") == 2);
  CHECK(run_cli(input + out + " --budget 2 --time-budget 5") == 2);
  CHECK(run_cli(input + out + " --format gif") == 2);
  CHECK(run_cli(input + out + " --captioner bogus") == 2);
  CHECK(run_cli("--input " + (dir / "missing.y4m").string() + out) == 3);
  CHECK(run_cli("--input " + (dir / "v.rgb").string() + " --input-format rgb24 --fps 25" + out) == 2);
  std::ofstream(dir / "bad.y4m") << "NOTY4M 8 6\n";
  CHECK(run_cli("--input " + (dir / "bad.y4m").string() + " --input-format y4m" + out) == 3);
  CHECK(run_cli(input + out + " --captioner 'exec:exit 1' --timeout 2") == 4);

  std::ofstream(dir / "blocker") << "x";
  CHECK(run_cli(input + " --out " + (dir / "blocker" / "out").string()) == 5);
}

TEST_CASE("cli cache and stdin") {
  TempDir dir;
  auto video = two_shot_video();
  testing::write_rgb24(dir / "v.rgb", video.frames);
  const std::string fmt = " --input-format rgb24 --fps 25 --width 8 --height 6 --budget 2";

  CHECK(run_cli("--input " + (dir / "v.rgb").string() + fmt + " --out " + (dir / "a").string() + " --cache " +
                    (dir / "ignored.json").string(),
                "KEYCAP_CACHE=" + (dir / "env.json").string()) == 0);
  CHECK(fs::exists(dir / "env.json"));
  CHECK_FALSE(fs::exists(dir / "ignored.json"));
  auto cache = nlohmann::json::parse(slurp(dir / "env.json"));
  CHECK(cache["version"] == 1);
  CHECK(cache["entries"].size() == 2);

  CHECK(run_cli("--input - " + fmt + " --out " + (dir / "b").string() + " < " + (dir / "v.rgb").string()) == 0);
  auto a = nlohmann::json::parse(slurp(dir / "a" / "description.json"));
  auto b = nlohmann::json::parse(slurp(dir / "b" / "description.json"));
  // Same content; only the cache counters may differ.
  a["report"].erase("n_cache_hits");
  b["report"].erase("n_cache_hits");
  a["report"].erase("n_captioner_calls");
  b["report"].erase("n_captioner_calls");
  CHECK(a == b);

  std::ofstream(dir / "corrupt.json") << "[[[";
  CHECK(run_cli("--input " + (dir / "v.rgb").string() + fmt + " --out " + (dir / "c").string() + " --cache " +
                (dir / "corrupt.json").string()) == 5);
}

TEST_CASE("distance dump") {
  TempDir dir;
  auto video = two_shot_video();
  auto cfg = base_config(testing::rgb24_source(video, dir / "v.rgb"), dir / "out");
  cfg.dump_distances = dir / "d.tsv";
  run_pipeline(cfg);
  std::istringstream in(slurp(dir / "d.tsv"));
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == video.frames.size() - 1);
}

}  // namespace
}  // namespace keycap
