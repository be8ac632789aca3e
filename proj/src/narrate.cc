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

#include "keycap/narrate.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace keycap {

namespace {

constexpr std::array<std::string_view, 50> kStopwords = {
    "a",    "an",    "the",   "and",  "or",   "but",  "of",    "to",   "in",   "on",
    "at",   "by",    "for",   "with", "from", "into", "onto",  "over", "as",   "is",
    "are",  "was",   "were",  "be",   "been", "being", "it",   "its",  "this", "that",
    "these", "those", "there", "here", "he",  "she",  "they",  "his",  "her",  "their",
    "them", "some",  "each",  "other", "very", "just", "while", "has", "have", "than",
};

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool ends_sentence(const std::string& s) {
  return !s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?');
}

// Caption text as it appears inside a story line: trimmed, no final period.
std::string story_text(const std::string& text) {
  std::string t = trim(text);
  while (!t.empty() && t.back() == '.') t.pop_back();
  return t;
}

}  // namespace

std::span<const std::string_view> stopwords() { return kStopwords; }

bool is_stopword(std::string_view word) {
  return std::find(kStopwords.begin(), kStopwords.end(), word) != kStopwords.end();
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (ch == '\'' && !current.empty()) {
      continue;  // "it's" -> "its"
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::set<std::string> token_set(std::string_view text) {
  std::set<std::string> out;
  for (auto& w : tokenize(text)) {
    if (!is_stopword(w)) out.insert(std::move(w));
  }
  return out;
}

double caption_similarity(std::string_view a, std::string_view b) {
  auto ta = token_set(a);
  auto tb = token_set(b);
  if (ta.empty() && tb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& w : ta) common += tb.count(w);
  return static_cast<double>(common) / static_cast<double>(ta.size() + tb.size() - common);
}

std::vector<Caption> dedup_captions(std::span<const Caption> captions, double threshold) {
  std::vector<Caption> kept;
  for (const auto& c : captions) {
    bool novel = std::all_of(kept.begin(), kept.end(),
                             [&](const Caption& k) { return caption_similarity(c, k) < threshold; });
    if (novel) kept.push_back(c);
  }
  return kept;
}

std::string compose_abstract(std::span<const Caption> captions) {
  if (captions.empty()) throw NarrationError("cannot compose an abstract from zero captions");
  std::string out;
  for (const auto& c : captions) {
    std::string sentence = trim(c.text);
    if (sentence.empty()) continue;
    sentence[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sentence[0])));
    if (!ends_sentence(sentence)) sentence.push_back('.');
    if (!out.empty()) out.push_back(' ');
    out += sentence;
  }
  return out;
}

std::string generate_title(std::span<const Caption> captions) {
  if (captions.empty()) throw NarrationError("cannot generate a title from zero captions");

  std::vector<std::vector<std::string>> content(captions.size());
  std::map<std::string, std::size_t> frequency;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    for (auto& w : tokenize(captions[i].text)) {
      if (is_stopword(w)) continue;
      ++frequency[w];
      content[i].push_back(std::move(w));
    }
  }

  std::size_t best = captions.size();
  double best_score = 0.0;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    if (content[i].empty()) continue;
    double sum = 0.0;
    for (const auto& w : content[i]) sum += static_cast<double>(frequency[w]);
    double score = sum / static_cast<double>(content[i].size());
    if (best == captions.size() || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  if (best == captions.size()) throw NarrationError("every caption consists of stopwords only");

  std::vector<std::string> words;
  std::istringstream in(trim(captions[best].text));
  for (std::string w; in >> w;) words.push_back(w);
  if (words.size() > 1) {
    std::string first = words.front();
    std::transform(first.begin(), first.end(), first.begin(), [](unsigned char c) { return std::tolower(c); });
    if (first == "a" || first == "an" || first == "the") words.erase(words.begin());
  }
  if (words.size() > kMaxTitleWords) words.resize(kMaxTitleWords);
  while (!words.empty()) {
    std::string& last = words.back();
    while (!last.empty() && std::ispunct(static_cast<unsigned char>(last.back()))) last.pop_back();
    if (!last.empty()) break;
    words.pop_back();
  }

  std::string title;
  for (const auto& w : words) {
    if (!title.empty()) title.push_back(' ');
    title += w;
  }
  if (!title.empty()) title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
  return title;
}

ActivityStory build_activity_story(std::span<const CaptionedKeyframe> captioned, std::span<const Shot> shots,
                                   double duration_s, double threshold) {
  if (shots.empty()) throw NarrationError("no shots to narrate");
  const double period = duration_s / static_cast<double>(shots.back().end + 1);

  ActivityStory story;
  std::vector<Caption> labels;  // caption kept for each entry
  bool leading_gap = false;
  for (std::size_t si = 0; si < shots.size(); ++si) {
    const Shot& shot = shots[si];
    const CaptionedKeyframe* label = nullptr;
    for (const auto& ck : captioned) {
      if (ck.keyframe.shot_id != shot.id || !ck.ok()) continue;
      if (label == nullptr || ck.keyframe.rank < label->keyframe.rank) label = &ck;
    }
    const double start = static_cast<double>(shot.start) * period;
    const double end = si + 1 == shots.size() ? duration_s : static_cast<double>(shot.end + 1) * period;

    if (label == nullptr) {
      if (story.entries.empty()) {
        leading_gap = true;
      } else {
        story.entries.back().end_s = end;
      }
      continue;
    }
    if (!story.entries.empty() && caption_similarity(labels.back(), *label->caption) >= threshold) {
      story.entries.back().end_s = end;
      story.entries.back().source_keyframes.push_back(label->keyframe.frame_index);
      continue;
    }
    TimelineEntry entry;
    entry.start_s = story.entries.empty() && leading_gap ? 0.0 : start;
    entry.end_s = end;
    entry.text = story_text(label->caption->text);
    entry.source_keyframes.push_back(label->keyframe.frame_index);
    story.entries.push_back(std::move(entry));
    labels.push_back(*label->caption);
  }
  if (story.entries.empty()) throw NarrationError("no successfully captioned keyframes");
  story.entries.front().start_s = 0.0;
  story.entries.back().end_s = duration_s;
  story.text = render_story(story.entries);
  return story;
}

std::string render_story(std::span<const TimelineEntry> entries) {
  std::string out;
  char line[64];
  for (const auto& e : entries) {
    long long start = std::llround(e.start_s);
    long long end = std::llround(e.end_s);
    long long duration = std::llround(e.end_s - e.start_s);
    std::snprintf(line, sizeof(line), "From %02lld:%02lld to %02lld:%02lld: ", start / 60, start % 60, end / 60,
                  end % 60);
    out += line;
    out += e.text;
    std::snprintf(line, sizeof(line), " (duration %lld s).\n", duration);
    out += line;
  }
  return out;
}

bool needs_escalation(std::span<const CaptionedKeyframe> shot_captions, double threshold) {
  if (shot_captions.empty()) throw std::invalid_argument("needs_escalation requires at least one caption attempt");
  bool any = false;
  double best = 0.0;
  for (const auto& ck : shot_captions) {
    if (!ck.ok()) continue;
    best = any ? std::max(best, ck.caption->effective_confidence()) : ck.caption->effective_confidence();
    any = true;
  }
  return !any || best < threshold;
}

}  // namespace keycap
