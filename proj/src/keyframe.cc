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

#include "keycap/keyframe.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include "keycap/captioner.h"
#include "keycap/hash.h"

namespace keycap {

void Budget::validate() const {
  if (per_shot_cap < 1) throw std::invalid_argument("per_shot_cap must be at least 1");
  if (mode == BudgetMode::kCount && k < 1) throw std::invalid_argument("budget k must be at least 1");
  if (mode == BudgetMode::kTime && !(time_limit_s > 0.0)) {
    throw std::invalid_argument("time budget must be positive");
  }
}

std::vector<std::size_t> allocate_budget(std::span<const Shot> shots, const Budget& budget) {
  budget.validate();
  if (budget.mode != BudgetMode::kCount) throw std::invalid_argument("allocate_budget needs a count budget");
  if (shots.empty()) throw std::invalid_argument("empty shot list");

  const std::size_t n = shots.size();
  std::vector<std::size_t> caps(n);
  std::size_t total_cap = 0;
  std::size_t total_len = 0;
  for (std::size_t i = 0; i < n; ++i) {
    caps[i] = std::min(shots[i].length(), budget.per_shot_cap);
    total_cap += caps[i];
    total_len += shots[i].length();
  }
  const std::size_t seats = std::min(budget.k, total_cap);
  std::vector<std::size_t> counts(n, 0);

  if (budget.k < n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (shots[a].length() != shots[b].length()) return shots[a].length() > shots[b].length();
      return shots[a].start < shots[b].start;
    });
    for (std::size_t i = 0; i < budget.k; ++i) counts[order[i]] = 1;
    return counts;
  }

  // Quotas S * L_i / N are compared as exact integers S * L_i - extra_i * N.
  const std::int64_t surplus = static_cast<std::int64_t>(seats - n);
  const std::int64_t len_sum = static_cast<std::int64_t>(total_len);
  std::vector<std::int64_t> extra(n);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t quota_floor = surplus * static_cast<std::int64_t>(shots[i].length()) / len_sum;
    extra[i] = std::min(quota_floor, static_cast<std::int64_t>(caps[i] - 1));
    assigned += extra[i];
  }
  while (assigned < surplus) {
    std::size_t best = n;
    std::int64_t best_deficit = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (extra[i] >= static_cast<std::int64_t>(caps[i] - 1)) continue;
      std::int64_t deficit = surplus * static_cast<std::int64_t>(shots[i].length()) - extra[i] * len_sum;
      if (best == n || deficit > best_deficit) {
        best = i;
        best_deficit = deficit;
      }
    }
    ++extra[best];
    ++assigned;
  }
  for (std::size_t i = 0; i < n; ++i) counts[i] = 1 + static_cast<std::size_t>(extra[i]);
  return counts;
}

std::vector<Keyframe> select_shot_keyframes(const Shot& shot, std::span<const Signature> signatures,
                                            std::size_t count) {
  if (count == 0) return {};
  if (count > shot.length()) {
    throw std::logic_error("shot " + std::to_string(shot.id) + " has " + std::to_string(shot.length()) +
                           " frames but " + std::to_string(count) + " keyframes were requested");
  }
  if (shot.end >= signatures.size()) throw std::logic_error("shot extends past the signature list");

  const std::size_t stride = (shot.length() + kMaxMedoidCandidates - 1) / kMaxMedoidCandidates;
  std::vector<std::size_t> candidates;
  for (std::size_t f = shot.start; f <= shot.end; f += stride) candidates.push_back(f);

  std::size_t medoid = candidates.front();
  double best = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (i != j) total += signature_distance(signatures[candidates[i]], signatures[candidates[j]]);
    }
    if (i == 0 || total < best) {
      best = total;
      medoid = candidates[i];
    }
  }

  std::vector<Keyframe> picks{{medoid, shot.id, 0}};
  // nearest[f] = distance from frame f to its closest pick so far.
  std::vector<double> nearest(shot.length());
  std::vector<bool> taken(shot.length(), false);
  taken[medoid - shot.start] = true;
  for (std::size_t f = shot.start; f <= shot.end; ++f) {
    nearest[f - shot.start] = signature_distance(signatures[f], signatures[medoid]);
  }
  for (std::size_t rank = 1; rank < count; ++rank) {
    std::size_t far = shot.length();
    for (std::size_t o = 0; o < shot.length(); ++o) {
      if (taken[o]) continue;
      if (far == shot.length() || nearest[o] > nearest[far]) far = o;
    }
    taken[far] = true;
    const std::size_t frame = shot.start + far;
    picks.push_back({frame, shot.id, rank});
    for (std::size_t o = 0; o < shot.length(); ++o) {
      nearest[o] = std::min(nearest[o], signature_distance(signatures[shot.start + o], signatures[frame]));
    }
  }
  std::sort(picks.begin(), picks.end(),
            [](const Keyframe& a, const Keyframe& b) { return a.frame_index < b.frame_index; });
  return picks;
}

std::vector<Keyframe> select_keyframes(std::span<const Shot> shots, std::span<const Signature> signatures,
                                       std::span<const std::size_t> counts) {
  if (counts.size() != shots.size()) throw std::invalid_argument("one count per shot required");
  std::vector<Keyframe> out;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    auto picks = select_shot_keyframes(shots[i], signatures, counts[i]);
    out.insert(out.end(), picks.begin(), picks.end());
  }
  std::sort(out.begin(), out.end(),
            [](const Keyframe& a, const Keyframe& b) { return a.frame_index < b.frame_index; });
  return out;
}

double coverage(std::span<const Shot> shots, std::span<const std::size_t> counts) {
  std::size_t funded = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    total += shots[i].length();
    if (i < counts.size() && counts[i] > 0) funded += shots[i].length();
  }
  return total == 0 ? 0.0 : static_cast<double>(funded) / static_cast<double>(total);
}

std::size_t budget_from_probe(double time_limit_s, double elapsed_s, double latency_s, std::size_t max_k) {
  const double latency = std::max(latency_s, 1e-3);
  const double remaining = time_limit_s - elapsed_s;
  double k = remaining > 0.0 ? std::floor(remaining / latency) : 0.0;
  if (k >= static_cast<double>(max_k)) return std::max<std::size_t>(1, max_k);
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

Calibration calibrate_time_budget(const Budget& budget, std::span<const Shot> shots,
                                  std::span<const Signature> signatures,
                                  const std::function<Frame(std::size_t)>& fetch_frame,
                                  CaptionBackend& backend, CaptionCache& cache,
                                  std::chrono::steady_clock::time_point started) {
  budget.validate();
  if (budget.mode != BudgetMode::kTime) throw std::invalid_argument("calibration needs a time budget");
  if (shots.empty()) throw std::invalid_argument("empty shot list");

  const Shot* longest = &shots.front();
  for (const auto& s : shots) {
    if (s.length() > longest->length()) longest = &s;
  }
  Keyframe probe = select_shot_keyframes(*longest, signatures, 1).front();
  Frame frame = fetch_frame(probe.frame_index);

  auto t0 = std::chrono::steady_clock::now();
  Caption caption;
  try {
    caption = backend.caption(frame);
  } catch (const CaptionError&) {
    throw;
  } catch (const std::exception& e) {
    throw CaptionError(backend.name(), probe.frame_index, e.what());
  }
  auto t1 = std::chrono::steady_clock::now();
  cache.insert({backend.model_id(), fnv1a64(frame.pixels)}, caption);

  std::size_t max_k = 0;
  for (const auto& s : shots) max_k += std::min(s.length(), budget.per_shot_cap);
  Calibration out;
  out.latency_s = std::chrono::duration<double>(t1 - t0).count();
  out.elapsed_s = std::chrono::duration<double>(t1 - started).count();
  out.budget = Budget::count(budget_from_probe(budget.time_limit_s, out.elapsed_s, out.latency_s, max_k),
                             budget.per_shot_cap);
  out.probe = probe;
  return out;
}

}  // namespace keycap
