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

#ifndef KEYCAP_SHOTDETECT_H_
#define KEYCAP_SHOTDETECT_H_

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "keycap/frame.h"

namespace keycap {

inline constexpr std::size_t kSignatureBins = 512;

/// Joint RGB histogram, 8 bins per channel, L1-normalized.
/// Bin id = (r >> 5) * 64 + (g >> 5) * 8 + (b >> 5).
struct Signature {
  std::array<double, kSignatureBins> bins{};
};

Signature frame_signature(const Frame& frame);

/// Total-variation distance, 0.5 * sum |a_i - b_i|, in [0, 1].
double signature_distance(const Signature& a, const Signature& b);

/// Distance between frames t-1 and t.
struct DistanceSample {
  std::size_t boundary_index = 0;
  double value = 0.0;
};

/// Inclusive frame interval.
struct Shot {
  std::size_t id = 0;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start + 1; }
  bool operator==(const Shot&) const = default;
};

struct ShotParams {
  double abs_floor = 0.25;
  std::size_t window = 15;
  double sensitivity = 3.0;
  std::size_t min_shot_len = 8;

  /// Throws std::invalid_argument when out of range.
  void validate() const;
};

/// N-1 consecutive-frame distances; empty for a single signature.
std::vector<DistanceSample> distance_series(std::span<const Signature> signatures);

// Segments [0, n_frames-1] into shots.
//
// A boundary is declared at t when all three hold:
//   value_t > abs_floor,
//   value_t > mean + sensitivity * stddev over the trailing window,
//   t - previous_boundary >= min_shot_len.
// The trailing window holds up to `window` samples immediately before t; with
// fewer than two samples only the floor applies. stddev is the population
// deviation. The window ignores earlier boundaries, so whether a sample
// clears the first two tests does not depend on past decisions and raising
// abs_floor can only remove boundaries.
std::vector<Shot> detect_shots(std::span<const DistanceSample> series, std::size_t n_frames,
                               const ShotParams& params = {});

/// Writes "t<TAB>value" lines with six decimals.
void write_distance_dump(std::ostream& out, std::span<const DistanceSample> series);

}  // namespace keycap

#endif  // KEYCAP_SHOTDETECT_H_
