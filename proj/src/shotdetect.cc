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

#include "keycap/shotdetect.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace keycap {

Signature frame_signature(const Frame& frame) {
  std::array<std::size_t, kSignatureBins> counts{};
  const std::uint8_t* px = frame.pixels.data();
  const std::size_t n = frame.pixel_count();
  for (std::size_t i = 0; i < n; ++i, px += 3) {
    ++counts[(px[0] >> 5) * 64 + (px[1] >> 5) * 8 + (px[2] >> 5)];
  }
  Signature sig;
  if (n == 0) return sig;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t b = 0; b < kSignatureBins; ++b) sig.bins[b] = static_cast<double>(counts[b]) * inv;
  return sig;
}

double signature_distance(const Signature& a, const Signature& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kSignatureBins; ++i) sum += std::fabs(a.bins[i] - b.bins[i]);
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

void ShotParams::validate() const {
  if (!(abs_floor > 0.0 && abs_floor <= 1.0)) throw std::invalid_argument("abs_floor must lie in (0, 1]");
  if (window < 2) throw std::invalid_argument("window must be at least 2");
  if (!(sensitivity > 0.0)) throw std::invalid_argument("sensitivity must be positive");
  if (min_shot_len < 1) throw std::invalid_argument("min_shot_len must be at least 1");
}

std::vector<DistanceSample> distance_series(std::span<const Signature> signatures) {
  std::vector<DistanceSample> out;
  for (std::size_t t = 1; t < signatures.size(); ++t) {
    out.push_back({t, signature_distance(signatures[t - 1], signatures[t])});
  }
  return out;
}

std::vector<Shot> detect_shots(std::span<const DistanceSample> series, std::size_t n_frames,
                               const ShotParams& params) {
  params.validate();
  if (n_frames == 0 || series.size() != n_frames - 1) {
    throw std::invalid_argument("distance series length " + std::to_string(series.size()) +
                                " does not match " + std::to_string(n_frames) + " frames");
  }
  std::vector<std::size_t> boundaries;
  std::size_t previous = 0;
  for (std::size_t t = 1; t < n_frames; ++t) {
    const double value = series[t - 1].value;
    if (value <= params.abs_floor || t - previous < params.min_shot_len) continue;

    const std::size_t first = t > params.window ? t - params.window : 1;
    std::size_t count = t - first;
    if (count >= 2) {
      double mean = 0.0;
      for (std::size_t s = first; s < t; ++s) mean += series[s - 1].value;
      mean /= static_cast<double>(count);
      double var = 0.0;
      for (std::size_t s = first; s < t; ++s) {
        double d = series[s - 1].value - mean;
        var += d * d;
      }
      double stddev = std::sqrt(var / static_cast<double>(count));
      if (value <= mean + params.sensitivity * stddev) continue;
    }
    boundaries.push_back(t);
    previous = t;
  }

  std::vector<Shot> shots;
  std::size_t start = 0;
  for (std::size_t b : boundaries) {
    shots.push_back({shots.size(), start, b - 1});
    start = b;
  }
  shots.push_back({shots.size(), start, n_frames - 1});
  return shots;
}

void write_distance_dump(std::ostream& out, std::span<const DistanceSample> series) {
  char line[64];
  for (const auto& s : series) {
    std::snprintf(line, sizeof(line), "%zu\t%.6f\n", s.boundary_index, s.value);
    out << line;
  }
}

}  // namespace keycap
