// Copyright (c) 2026 The NELS Authors. All Rights Reserved.
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

#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "nels/errors.h"
#include "nels/query_mapper.h"

using namespace nels;

namespace {

std::shared_ptr<EmbeddingVocabulary> table(const std::string& text) {
  std::istringstream in(text);
  return std::make_shared<EmbeddingVocabulary>(read_embeddings(in));
}

Vocabulary classes(std::initializer_list<const char*> labels) {
  Vocabulary v;
  for (auto l : labels) v.add(l, Dataset::kCustom);
  return v;
}

}  // namespace

TEST_CASE("embedding table parsing") {
  const auto t = table("dog 1 0 0 0\ncat 0 1 0 0\nDog 0 0 1 0\n\nrain 0 0 0 1\n");
  CHECK(t->dimension() == 4);
  CHECK(t->size() == 3);
  CHECK(t->duplicates() == 1);
  REQUIRE(t->find("dog"));
  CHECK(*t->find("dog") == std::vector<double>{0, 0, 1, 0});

  SUBCASE("short row names its line") {
    std::istringstream in("a 1 2 3 4\nb 1 2 3 4\nc 1 2 3\n");
    try {
      read_embeddings(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("non-numeric value") {
    std::istringstream in("a 1 2\nb 1 x\n");
    CHECK_THROWS_AS(read_embeddings(in), ParseError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_embeddings("/nonexistent/embeddings.txt"), ConfigError); }
  SUBCASE("dimension is fixed by the first vector") {
    EmbeddingVocabulary v;
    v.add("a", {1, 2});
    CHECK_THROWS_AS(v.add("b", {1, 2, 3}), ContractViolation);
  }
}

TEST_CASE("tokenizing and embedding text") {
  CHECK(normalize_tokens("Dog_Bark, loud-ly!") == std::vector<std::string>{"dog", "bark", "loud", "ly"});
  CHECK(normalize_tokens("  ").empty());

  const auto t = table("dog 1 0\nbark 0 1\n");
  CHECK(*embed_text(*t, "dog") == std::vector<double>{1, 0});
  CHECK(*embed_text(*t, "Dog barking bark") == std::vector<double>{0.5, 0.5});
  CHECK_FALSE(embed_text(*t, "xylophone quartet"));
}

TEST_CASE("cosine similarity") {
  const std::vector<double> a{1, 0}, b{0.6, 0.8};
  CHECK(cosine_similarity(a, b) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(cosine_similarity(a, b) == cosine_similarity(b, a));
  CHECK(cosine_similarity(a, a) == 1.0);
  CHECK_THROWS_AS(cosine_similarity(a, std::vector<double>{0, 0}), UndefinedSimilarityError);
  CHECK_THROWS_AS(cosine_similarity(a, std::vector<double>{1, 0, 0}), ContractViolation);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> x(16), y(16);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    const double s = cosine_similarity(x, y);
    REQUIRE(s >= -1.0);
    REQUIRE(s <= 1.0);
    REQUIRE(s == doctest::Approx(cosine_similarity(y, x)).epsilon(1e-12));
    auto xs = x;
    const double c = scale(rng);
    for (auto& v : xs) v *= c;
    REQUIRE(cosine_similarity(xs, y) == doctest::Approx(s).epsilon(1e-9));
  }
}

TEST_CASE("mapping queries to classes") {
  const auto t = table(
      "dog 1 0 0\n"
      "puppy 0.8 0.6 0\n"
      "siren 0.1 0 0.99498743710662\n"
      "banana 0 1 0\n");
  const QueryMapper mapper(t, classes({"dog", "siren", "glockenspiel"}));
  CHECK(mapper.matchable_classes() == 2);

  const auto exact = mapper.map("dog");
  REQUIRE(exact.matched_class);
  CHECK(exact.matched_class->label == "dog");
  CHECK(*exact.similarity == doctest::Approx(1.0).epsilon(1e-6));

  const auto near = mapper.map("Puppy");
  REQUIRE(near.matched_class);
  CHECK(near.matched_class->label == "dog");
  CHECK(*near.similarity == doctest::Approx(0.8));

  const auto none = mapper.map("banana");
  CHECK_FALSE(none.matched_class);
  REQUIRE(none.similarity);
  CHECK(*none.similarity == doctest::Approx(0.0));

  const auto oov = mapper.map("zzz qqq");
  CHECK_FALSE(oov.matched_class);
  CHECK_FALSE(oov.similarity);

  CHECK(map_query(*t, classes({"dog"}), "puppy").matched_class->label == "dog");
}

TEST_CASE("threshold is inclusive") {
  // |(3,19,5,2,1)| = 20, so the cosine against e1 is exactly 3/20.
  const auto t = table("beep 1 0 0 0 0\nzzz 3 19 5 2 1\nyyy 2.9 19 5 2 1\n");
  const QueryMapper mapper(t, classes({"beep"}));
  const auto at = mapper.map("zzz");
  CHECK(*at.similarity == 0.15);
  CHECK(at.matched_class);
  const auto below = mapper.map("yyy");
  CHECK(*below.similarity < 0.15);
  CHECK_FALSE(below.matched_class);
}

TEST_CASE("mapping is invariant to rescaling the query vector") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  auto base = std::make_shared<EmbeddingVocabulary>();
  auto scaled = std::make_shared<EmbeddingVocabulary>();
  const char* words[] = {"alpha", "beta", "gamma", "delta", "omega"};
  for (auto w : words) {
    std::vector<double> v(8);
    for (auto& x : v) x = g(rng);
    base->add(w, v);
    scaled->add(w, v);
  }
  std::vector<double> q(8);
  for (auto& x : q) x = g(rng);
  base->add("query", q);
  for (auto& x : q) x *= 37.5;
  scaled->add("query", q);
  const auto cls = classes({"alpha", "beta", "gamma", "delta", "omega"});
  const auto a = QueryMapper(base, cls, -1.0).map("query");
  const auto b = QueryMapper(scaled, cls, -1.0).map("query");
  REQUIRE(a.matched_class);
  CHECK(a.matched_class == b.matched_class);
  CHECK(*a.similarity == doctest::Approx(*b.similarity).epsilon(1e-12));
}

TEST_CASE("ties go to the alphabetically first label") {
  const auto t = table("zebra 1 0\napple 1 0\nq 1 0\n");
  const QueryMapper mapper(t, classes({"zebra", "apple"}));
  CHECK(mapper.map("q").matched_class->label == "apple");
}

TEST_CASE("phrase discovery examples") {
  CHECK(discover_phrases("Forests may have sounds of birds singing at dawn") ==
        std::vector<std::string>{"birds singing"});
  CHECK(discover_phrases("no mention here").empty());
  CHECK(discover_phrases("the sound of the rain, then thunder") == std::vector<std::string>{"rain"});
  CHECK(discover_phrases("I love the sound of it") == std::vector<std::string>{});
  CHECK(discover_phrases("the sound of my neighbour's old lawn mower engine running") ==
        std::vector<std::string>{"neighbour's old lawn mower"});
  CHECK(discover_phrases("sound of ice-cream trucks. Sound of ice-cream trucks!") ==
        std::vector<std::string>{"ice-cream trucks"});
  CHECK(discover_phrases("the sound of").empty());
  CHECK(discover_phrases("a sound of, well") == std::vector<std::string>{});
}

TEST_CASE("discovered phrases are short, clean and taken from the text") {
  const std::vector<std::string> bag = {"sound", "sounds", "of",    "the",  "a",     "rain",  "dog",   "barking",
                                        "it",    "and",    "while", "loud", "trains", "my",   "engine", ",",
                                        ".",     "distant", "waves", "this", "crashing", "at", "they"};
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> pick(0, bag.size() - 1), len(0, 30);
  const std::set<std::string> banned_first = {"the", "a", "my", "it", "this", "they"};
  const std::set<std::string> stop = {"and", "while", "at"};
  for (int trial = 0; trial < 3000; ++trial) {
    std::string text;
    for (std::size_t i = len(rng); i > 0; --i) text += bag[pick(rng)] + " ";
    for (const auto& p : discover_phrases(text)) {
      std::istringstream ss(p);
      std::vector<std::string> words;
      for (std::string w; ss >> w;) words.push_back(w);
      REQUIRE(words.size() >= 1);
      REQUIRE(words.size() <= 4);
      REQUIRE_FALSE(banned_first.contains(words.front()));
      for (const auto& w : words) REQUIRE_FALSE(stop.contains(w));
      REQUIRE(text.find(p) != std::string::npos);
    }
  }
}
