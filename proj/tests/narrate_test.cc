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

#include <algorithm>
#include <cctype>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include <doctest.h>

#include "keycap/narrate.h"
#include "narrate_support.h"

namespace keycap {
namespace {

std::vector<Caption> captions_of(std::initializer_list<const char*> texts) {
  std::vector<Caption> out;
  for (const char* t : texts) out.push_back({t, std::nullopt, "test"});
  return out;
}

CaptionedKeyframe captioned(std::size_t frame, std::size_t shot, std::size_t rank, std::optional<std::string> text,
                            std::optional<double> confidence = std::nullopt) {
  CaptionedKeyframe ck;
  ck.keyframe = {frame, shot, rank};
  if (text) {
    ck.caption = Caption{*text, confidence, "test"};
  } else {
    ck.error = "failed";
  }
  return ck;
}

// Independent title scorer: regex tokenization and exact rational comparison.
// Returns the index of the winning caption.
std::size_t oracle_title_winner(const std::vector<Caption>& captions) {
  std::set<std::string> stop;
  for (auto w : stopwords()) stop.emplace(w);
  auto content = [&](const std::string& text) {
    std::string lower;
    for (char c : text) {
      if (c != '\'') lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    std::vector<std::string> out;
    static const std::regex word("[a-z0-9]+");
    for (auto it = std::sregex_iterator(lower.begin(), lower.end(), word); it != std::sregex_iterator(); ++it) {
      if (!stop.count(it->str())) out.push_back(it->str());
    }
    return out;
  };
  std::map<std::string, long> freq;
  std::vector<std::vector<std::string>> words;
  for (const auto& c : captions) {
    words.push_back(content(c.text));
    for (const auto& w : words.back()) ++freq[w];
  }
  std::size_t best = captions.size();
  long best_num = 0;
  long best_den = 1;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    if (words[i].empty()) continue;
    long num = 0;
    for (const auto& w : words[i]) num += freq[w];
    long den = static_cast<long>(words[i].size());
    if (best == captions.size() || num * best_den > best_num * den) {
      best = i;
      best_num = num;
      best_den = den;
    }
  }
  return best;
}

std::size_t count_sentences(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '.'));
}

TEST_CASE("stopword list is fixed") {
  CHECK(stopwords().size() == 50);
  CHECK(kStopwordListVersion == 1);
  CHECK(is_stopword("a"));
  CHECK(is_stopword("the"));
  CHECK_FALSE(is_stopword("bike"));
  CHECK_FALSE(is_stopword("down"));
  std::set<std::string_view> unique(stopwords().begin(), stopwords().end());
  CHECK(unique.size() == 50);
}

TEST_CASE("tokenize") {
  CHECK(tokenize("A man, riding a BIKE!") == std::vector<std::string>{"a", "man", "riding", "a", "bike"});
  CHECK(tokenize("it's 3 o'clock") == std::vector<std::string>{"its", "3", "oclock"});
  CHECK(tokenize("  ").empty());
  CHECK(token_set("a man riding a bike") == std::set<std::string>{"man", "riding", "bike"});
}

TEST_CASE("caption similarity") {
  CHECK(caption_similarity("a dog in a park", "a dog in a park") == 1.0);
  CHECK(caption_similarity("a dog", "the cat") == 0.0);
  CHECK(caption_similarity("a man riding a bike", "a man riding a horse") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(caption_similarity("the", "a an") == 1.0);
  CHECK(caption_similarity("the", "dog") == 0.0);
  CHECK(caption_similarity("A Dog.", "a dog") == 1.0);
}

const std::vector<Caption> kTripCaptions = captions_of({
    "A group of people standing next to each other.",
    "A man is holding his camera up to take a picture.",
    "A group of people riding a boat across a body of water.",
});

TEST_CASE("dedup") {
  auto same = captions_of({"a dog in a park", "a dog in a park", "A dog in a park."});
  CHECK(dedup_captions(same).size() == 1);

  auto disjoint = captions_of({"a dog", "a cat", "a bird"});
  CHECK(dedup_captions(disjoint) == disjoint);

  // {group,people,standing,next} vs {group,people,riding,boat,across,body,water}: 2/9.
  CHECK(caption_similarity(kTripCaptions[0], kTripCaptions[2]) == doctest::Approx(2.0 / 9.0));
  CHECK(caption_similarity(kTripCaptions[0], kTripCaptions[1]) == 0.0);
  CHECK(dedup_captions(kTripCaptions) == kTripCaptions);

  // Earliest wins.
  auto near = captions_of({"a man riding a bike", "a man riding a bike fast", "a dog"});
  auto kept = dedup_captions(near);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].text == "a man riding a bike");
  CHECK(kept[1].text == "a dog");
  CHECK(dedup_captions(near, 0.9).size() == 3);
}

TEST_CASE("abstract") {
  CHECK(compose_abstract(kTripCaptions) ==
        "A group of people standing next to each other. A man is holding his camera up to take a picture. "
        "A group of people riding a boat across a body of water.");
  CHECK(compose_abstract(captions_of({"a woman standing in a kitchen next to a stove top oven"})) ==
        "A woman standing in a kitchen next to a stove top oven.");
  CHECK(compose_abstract(captions_of({"a dog.", "  a cat  ", "is it raining?"})) == "A dog. A cat. Is it raining?");
  CHECK_THROWS_AS(compose_abstract({}), NarrationError);
}

TEST_CASE("title") {
  auto three = captions_of({"a man riding a bike", "a man riding a bike down a street", "a dog in a park"});
  // Mean word frequency: 6/3 for the first caption, 8/5 for the second.
  CHECK(oracle_title_winner(three) == 0);
  CHECK(generate_title(three) == "Man riding a bike");

  CHECK(generate_title(captions_of({"the quick brown fox jumps over the lazy dog near a river bank today"})) ==
        "Quick brown fox jumps over the lazy dog near a");
  CHECK(generate_title(captions_of({"A dog in a park."})) == "Dog in a park");
  CHECK_THROWS_AS(generate_title({}), NarrationError);
  CHECK_THROWS_AS(generate_title(captions_of({"the", "a an"})), NarrationError);
  // Stopword-only captions are skipped, not fatal.
  CHECK(generate_title(captions_of({"the", "a cat"})) == "Cat");
  // Ties go to the earliest caption.
  CHECK(generate_title(captions_of({"a red car", "a blue bus"})) == "Red car");
}

TEST_CASE("activity story examples") {
  SUBCASE("single shot") {
    std::vector<Shot> shots{{0, 0, 99}};
    std::vector<CaptionedKeyframe> cks{captioned(10, 0, 0, "a dog in a park")};
    auto story = build_activity_story(cks, shots, 4.0);
    REQUIRE(story.entries.size() == 1);
    CHECK(story.entries[0].start_s == 0.0);
    CHECK(story.entries[0].end_s == 4.0);
    CHECK(story.text == "From 00:00 to 00:04: a dog in a park (duration 4 s).\n");
  }
  SUBCASE("identical captions merge") {
    std::vector<Shot> shots{{0, 0, 49}, {1, 50, 99}};
    std::vector<CaptionedKeyframe> cks{captioned(0, 0, 0, "a dog in a park"), captioned(60, 1, 0, "a dog in a park")};
    auto story = build_activity_story(cks, shots, 4.0);
    REQUIRE(story.entries.size() == 1);
    CHECK(story.entries[0].source_keyframes == std::vector<std::size_t>{0, 60});
  }
  SUBCASE("30 s then 60 s") {
    std::vector<Shot> shots{{0, 0, 29}, {1, 30, 89}};
    std::vector<CaptionedKeyframe> cks{captioned(10, 0, 0, "a person running"),
                                       captioned(50, 1, 0, "a person lifting weights")};
    auto story = build_activity_story(cks, shots, 90.0);
    REQUIRE(story.entries.size() == 2);
    CHECK(story.text ==
          "From 00:00 to 00:30: a person running (duration 30 s).\n"
          "From 00:30 to 01:30: a person lifting weights (duration 60 s).\n");
  }
  SUBCASE("rank 0 labels the shot") {
    std::vector<Shot> shots{{0, 0, 9}};
    std::vector<CaptionedKeyframe> cks{captioned(2, 0, 1, "second pick"), captioned(5, 0, 0, "first pick.")};
    auto story = build_activity_story(cks, shots, 10.0);
    CHECK(story.entries.at(0).text == "first pick");
  }
  SUBCASE("failed rank 0 falls back to the next rank") {
    std::vector<Shot> shots{{0, 0, 9}};
    std::vector<CaptionedKeyframe> cks{captioned(2, 0, 1, "second pick"), captioned(5, 0, 0, std::nullopt)};
    CHECK(build_activity_story(cks, shots, 10.0).entries.at(0).text == "second pick");
  }
  SUBCASE("gaps inherit the previous label") {
    std::vector<Shot> shots{{0, 0, 9}, {1, 10, 19}, {2, 20, 29}};
    std::vector<CaptionedKeyframe> cks{captioned(0, 0, 0, "a cat"), captioned(10, 1, 0, std::nullopt),
                                       captioned(20, 2, 0, "a dog")};
    auto story = build_activity_story(cks, shots, 30.0);
    REQUIRE(story.entries.size() == 2);
    CHECK(story.entries[0].end_s == 20.0);
    CHECK(story.entries[1].start_s == 20.0);
  }
  SUBCASE("leading gap inherits the next label") {
    std::vector<Shot> shots{{0, 0, 9}, {1, 10, 19}};
    std::vector<CaptionedKeyframe> cks{captioned(15, 1, 0, "a dog")};
    auto story = build_activity_story(cks, shots, 20.0);
    REQUIRE(story.entries.size() == 1);
    CHECK(story.entries[0].start_s == 0.0);
    CHECK(story.entries[0].end_s == 20.0);
  }
  SUBCASE("no captions at all") {
    std::vector<Shot> shots{{0, 0, 9}};
    std::vector<CaptionedKeyframe> cks{captioned(0, 0, 0, std::nullopt)};
    CHECK_THROWS_AS(build_activity_story(cks, shots, 1.0), NarrationError);
  }
}

TEST_CASE("story rendering") {
  std::vector<TimelineEntry> entries{{0.0, 59.6, "a", {}}, {59.6, 3725.0, "b", {}}};
  CHECK(render_story(entries) ==
        "From 00:00 to 01:00: a (duration 60 s).\n"
        "From 01:00 to 62:05: b (duration 3665 s).\n");
  CHECK(render_story({}).empty());
}

TEST_CASE("escalation decision") {
  CHECK_FALSE(needs_escalation(std::vector{captioned(0, 0, 0, "x", 0.9)}));
  CHECK(needs_escalation(std::vector{captioned(0, 0, 0, "x", 0.3)}));
  CHECK_FALSE(needs_escalation(std::vector{captioned(0, 0, 0, "x", 0.4), captioned(1, 0, 1, "y", 0.6)}));
  CHECK(needs_escalation(std::vector{captioned(0, 0, 0, std::nullopt), captioned(1, 0, 1, std::nullopt)}));
  CHECK_FALSE(needs_escalation(std::vector{captioned(0, 0, 0, "x")}));
  CHECK_FALSE(needs_escalation(std::vector{captioned(0, 0, 0, "x", 0.5)}));
  CHECK(needs_escalation(std::vector{captioned(0, 0, 0, "x", 0.5)}, 0.51));
  CHECK_THROWS_AS(needs_escalation({}), std::invalid_argument);
}

TEST_CASE("narration properties on random instances") {
  std::mt19937 rng(20261015);
  for (int iter = 0; iter < 500; ++iter) {
    auto caps = testing::random_captions(rng);
    auto once = dedup_captions(caps);
    CHECK(dedup_captions(once) == once);
    CHECK_FALSE(once.empty());

    std::string abstract = compose_abstract(once);
    CHECK(count_sentences(abstract) <= caps.size());
    CHECK(compose_abstract(once) == abstract);

    std::string title = generate_title(once);
    CHECK(tokenize(title).size() <= kMaxTitleWords);
    std::size_t winner = oracle_title_winner(once);
    REQUIRE(winner < once.size());
    auto winner_words = tokenize(once[winner].text);
    auto title_words = tokenize(title);
    CHECK(std::search(winner_words.begin(), winner_words.end(), title_words.begin(), title_words.end()) !=
          winner_words.end());
    for (const auto& w : token_set(title)) {
      bool found = std::any_of(caps.begin(), caps.end(), [&](const Caption& c) { return token_set(c.text).count(w); });
      CHECK_MESSAGE(found, w);
    }

    auto inst = testing::random_timeline(rng);
    auto story = build_activity_story(inst.captioned, inst.shots, inst.duration_s);
    REQUIRE_FALSE(story.entries.empty());
    CHECK(story.entries.front().start_s == 0.0);
    CHECK(story.entries.back().end_s == inst.duration_s);
    double total = 0.0;
    for (std::size_t i = 0; i < story.entries.size(); ++i) {
      CHECK(story.entries[i].end_s > story.entries[i].start_s);
      if (i > 0) CHECK(story.entries[i].start_s == story.entries[i - 1].end_s);
      total += story.entries[i].end_s - story.entries[i].start_s;
    }
    CHECK(std::abs(total - inst.duration_s) <= 1.0 / inst.fps);
    CHECK(story.text == render_story(story.entries));
    CHECK(build_activity_story(inst.captioned, inst.shots, inst.duration_s).text == story.text);
  }
}

}  // namespace
}  // namespace keycap
