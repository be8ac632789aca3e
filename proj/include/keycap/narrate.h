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

#ifndef KEYCAP_NARRATE_H_
#define KEYCAP_NARRATE_H_

#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "keycap/captioner.h"
#include "keycap/shotdetect.h"

namespace keycap {

/// Bumped whenever the shipped stopword list changes.
inline constexpr int kStopwordListVersion = 1;

/// The fixed 50-word English stopword list.
std::span<const std::string_view> stopwords();
bool is_stopword(std::string_view word);

/// Lowercased words with punctuation stripped, in order, stopwords kept.
std::vector<std::string> tokenize(std::string_view text);
/// tokenize() minus stopwords, as a set.
std::set<std::string> token_set(std::string_view text);

class NarrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Jaccard similarity of token sets; two empty sets count as identical.
double caption_similarity(std::string_view a, std::string_view b);
inline double caption_similarity(const Caption& a, const Caption& b) { return caption_similarity(a.text, b.text); }

inline constexpr double kDefaultDupThreshold = 0.6;
inline constexpr double kDefaultConfThreshold = 0.5;

/// Keeps a caption iff it is less than `threshold` similar to every caption
/// already kept. Earliest occurrence wins.
std::vector<Caption> dedup_captions(std::span<const Caption> captions, double threshold = kDefaultDupThreshold);

/// Sentence-cases and period-terminates each caption, joined by spaces.
std::string compose_abstract(std::span<const Caption> captions);

// Extractive title. Each content word scores its frequency across all
// captions; a caption scores the mean over its content words. The best
// caption (earliest on ties) loses a leading article, is cut to ten words
// and gets a capital first letter.
std::string generate_title(std::span<const Caption> captions);

inline constexpr std::size_t kMaxTitleWords = 10;

struct TimelineEntry {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;
  std::vector<std::size_t> source_keyframes;
};

struct ActivityStory {
  std::vector<TimelineEntry> entries;
  std::string text;
};

// Labels each shot's span with its best-ranked successful caption and merges
// neighbours whose labels are at least `threshold` similar. Shots without a
// caption extend the previous entry (or the next one, at the start), so the
// entries always tile [0, duration_s].
ActivityStory build_activity_story(std::span<const CaptionedKeyframe> captioned, std::span<const Shot> shots,
                                   double duration_s, double threshold = kDefaultDupThreshold);

/// "From MM:SS to MM:SS: <text> (duration <s> s).\n" per entry.
std::string render_story(std::span<const TimelineEntry> entries);

/// True iff every attempt failed or the best confidence is below threshold.
/// Absent confidence counts as 1.0.
bool needs_escalation(std::span<const CaptionedKeyframe> shot_captions,
                      double threshold = kDefaultConfThreshold);

}  // namespace keycap

#endif  // KEYCAP_NARRATE_H_
