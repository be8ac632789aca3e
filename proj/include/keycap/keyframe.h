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

#ifndef KEYCAP_KEYFRAME_H_
#define KEYCAP_KEYFRAME_H_

#include <chrono>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "keycap/frame.h"
#include "keycap/shotdetect.h"

namespace keycap {

enum class BudgetMode { kCount, kTime };

inline constexpr std::size_t kUnlimitedCap = std::numeric_limits<std::size_t>::max();

/// The user's execution-time/accuracy knob: either a keyframe count or a
/// wall-clock limit that calibration turns into a count.
struct Budget {
  BudgetMode mode = BudgetMode::kCount;
  std::size_t k = 8;
  double time_limit_s = 0.0;
  std::size_t per_shot_cap = 4;

  static Budget count(std::size_t k, std::size_t cap = 4) { return {BudgetMode::kCount, k, 0.0, cap}; }
  static Budget time(double seconds, std::size_t cap = 4) { return {BudgetMode::kTime, 0, seconds, cap}; }

  void validate() const;
};

/// rank 0 is the shot representative; higher ranks are extra picks.
struct Keyframe {
  std::size_t frame_index = 0;
  std::size_t shot_id = 0;
  std::size_t rank = 0;

  bool operator==(const Keyframe&) const = default;
};

/// Largest candidate set used for a shot's medoid.
inline constexpr std::size_t kMaxMedoidCandidates = 64;

// Per-shot keyframe counts summing to min(k, sum of min(length, cap)).
//
// k < #shots: the k longest shots (ties to the earlier start) get one each.
// Otherwise every shot gets one and the surplus is apportioned by shot
// length with largest remainders, capped per shot; seats a capped shot
// cannot take go to the uncapped shot with the largest unmet quota.
std::vector<std::size_t> allocate_budget(std::span<const Shot> shots, const Budget& budget);

/// Picks `count` keyframes inside one shot: the medoid first, then
/// farthest-point additions. Deterministic; ties go to the lowest index.
std::vector<Keyframe> select_shot_keyframes(const Shot& shot, std::span<const Signature> signatures,
                                            std::size_t count);

/// select_shot_keyframes over every shot; output sorted by frame index.
std::vector<Keyframe> select_keyframes(std::span<const Shot> shots, std::span<const Signature> signatures,
                                       std::span<const std::size_t> counts);

/// Fraction of frames that lie in funded shots.
double coverage(std::span<const Shot> shots, std::span<const std::size_t> counts);

/// Count-mode k implied by a time limit: max(1, floor((limit - elapsed) / latency)),
/// latency clamped to at least 1 ms, result clamped to `max_k`.
std::size_t budget_from_probe(double time_limit_s, double elapsed_s, double latency_s, std::size_t max_k);

class CaptionBackend;
class CaptionCache;
struct CaptionedKeyframe;

struct Calibration {
  Budget budget;
  double latency_s = 0.0;
  double elapsed_s = 0.0;
  Keyframe probe;
};

// Turns a time budget into a count budget by captioning one probe keyframe
// (the representative of the longest shot) and timing it. The probe caption
// lands in `cache`, so the captioning stage reuses it. `started` marks when
// the caller's clock began; time spent before calibration counts against
// the limit. Throws CaptionError when the probe fails.
Calibration calibrate_time_budget(const Budget& budget, std::span<const Shot> shots,
                                  std::span<const Signature> signatures,
                                  const std::function<Frame(std::size_t)>& fetch_frame,
                                  CaptionBackend& backend, CaptionCache& cache,
                                  std::chrono::steady_clock::time_point started =
                                      std::chrono::steady_clock::now());

}  // namespace keycap

#endif  // KEYCAP_KEYFRAME_H_
