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

#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "nels/content_index.h"
#include "nels/errors.h"
#include "../oracles.h"
#include "../test_util.h"

using namespace nels;

namespace {

IndexEntry entry(const std::string& id, const std::string& label, double conf, const std::string& crawl = "") {
  return testutil::index_entry(id, label, conf, crawl);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Random index with coarse confidences so ties are common.
std::vector<IndexEntry> random_entries(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cls(0, 7), conf(50, 100), media(0, 999999);
  std::vector<IndexEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string label = "class" + std::to_string(cls(rng));
    out.push_back(entry("m" + std::to_string(media(rng)) + "#" + std::to_string(i), label, conf(rng) / 100.0));
  }
  return out;
}

FeedbackEvent vote(const std::string& id, Verdict v) { return {id, "x", v, ""}; }

}  // namespace

TEST_CASE("verdict names") {
  CHECK(parse_verdict("correct") == Verdict::kCorrect);
  CHECK(parse_verdict("INCORRECT") == Verdict::kIncorrect);
  CHECK_FALSE(parse_verdict("maybe"));
  CHECK(verdict_name(Verdict::kCorrect) == "Correct");
}

TEST_CASE("make_index_entry keeps the five best scores") {
  Vocabulary v;
  for (auto l : {"a", "b", "c", "d", "e", "f", "g"}) v.add(l, Dataset::kCustom);
  AudioSegment seg;
  seg.segment_id = "m#1";
  seg.media_id = "m";
  seg.offset_s = 2.3;
  MediaRecord rec;
  rec.media_id = "m";
  const auto e = make_index_entry(seg, {0.05, 0.3, 0.05, 0.4, 0.1, 0.02, 0.08}, v, "b", rec);
  REQUIRE(e.top_scores.size() == 5);
  CHECK(e.top_scores[0] == ScoredClass{"d", 0.4});
  CHECK(e.top_scores[1] == ScoredClass{"b", 0.3});
  CHECK(e.top_scores[2] == ScoredClass{"e", 0.1});
  CHECK(e.predicted_class == "d");
  CHECK(e.confidence == 0.4);
  CHECK(e.crawl_label == "b");
  CHECK(e.correct_votes == 0);
  CHECK_THROWS_AS(make_index_entry(seg, {1.0}, v, "b", rec), ContractViolation);
}

TEST_CASE("insert, get and re-insert") {
  ContentIndex index;
  const auto e = entry("m#0", "dog", 0.9);
  index.insert(e);
  CHECK(index.get("m#0") == e);
  CHECK_FALSE(index.get("nope"));

  index.record_feedback(vote("m#0", Verdict::kCorrect));
  index.record_feedback(vote("m#0", Verdict::kIncorrect));
  auto updated = entry("m#0", "siren", 0.6);
  index.insert(updated);
  const auto got = *index.get("m#0");
  CHECK(got.predicted_class == "siren");
  CHECK(got.confidence == 0.6);
  CHECK(got.correct_votes == 1);
  CHECK(got.incorrect_votes == 1);
  CHECK(index.query_by_class_topk("dog", 5).empty());
  CHECK(index.query_by_class_topk("siren", 5).size() == 1);
}

TEST_CASE("invalid entries are refused") {
  ContentIndex index;
  auto e = entry("m#0", "dog", 0.9);
  e.confidence = 0.8;
  CHECK_THROWS_AS(index.insert(e), InvalidInputError);
  e = entry("m#0", "dog", 0.9);
  e.top_scores.clear();
  CHECK_THROWS_AS(index.insert(e), InvalidInputError);
  e = entry("", "dog", 0.9);
  CHECK_THROWS_AS(index.insert(e), InvalidInputError);

  ContentIndex::Options opts;
  auto vocab = std::make_shared<Vocabulary>();
  vocab->add("dog", Dataset::kEsc50);
  opts.vocabulary = vocab;
  ContentIndex strict(opts);
  CHECK_NOTHROW(strict.insert(entry("a#0", "dog", 0.9)));
  CHECK_THROWS_AS(strict.insert(entry("a#1", "cat", 0.9)), InvalidInputError);
  CHECK_THROWS_AS(strict.insert(entry("a#2", "dog", 0.9, "cat")), InvalidInputError);
  CHECK(strict.size() == 1);
}

TEST_CASE("top-k ordering and limits") {
  ContentIndex index;
  for (int i = 0; i < 100; ++i) index.insert(entry("m" + std::to_string(i) + "#0", "rain", (i % 37) / 37.0));
  const auto top = index.query_by_class_topk("rain", 40);
  REQUIRE(top.size() == 40);
  for (std::size_t i = 1; i < top.size(); ++i) {
    CHECK(top[i].confidence <= top[i - 1].confidence);
    if (top[i].confidence == top[i - 1].confidence) CHECK(top[i - 1].segment_id < top[i].segment_id);
  }
  CHECK(index.query_by_class_topk("thunder", 40).empty());
  CHECK_THROWS_AS(index.query_by_class_topk("rain", 0), InvalidInputError);
}

TEST_CASE("top-k equals the brute-force oracle on 10000 random entries") {
  ContentIndex index;
  const auto all = random_entries(10000, 99);
  for (const auto& e : all) index.insert(e);
  for (int c = 0; c < 8; ++c) {
    const std::string label = "class" + std::to_string(c);
    for (std::size_t k : {std::size_t(1), std::size_t(40), std::size_t(500), std::size_t(20000)})
      REQUIRE(index.query_by_class_topk(label, k) == oracle::topk(all, label, k));
  }
  // Top-k is a prefix of the full ordering.
  const auto full = index.query_by_class_topk("class3", 100000);
  const auto some = index.query_by_class_topk("class3", 17);
  CHECK(std::equal(some.begin(), some.end(), full.begin()));
}

TEST_CASE("feedback tallies") {
  ContentIndex index;
  index.insert(entry("s#0", "dog", 0.5));
  CHECK(index.record_feedback(vote("s#0", Verdict::kCorrect)) == Tallies{1, 0});
  CHECK(index.record_feedback(vote("s#0", Verdict::kIncorrect)) == Tallies{1, 1});
  CHECK_THROWS_AS(index.record_feedback(vote("ghost", Verdict::kCorrect)), NotFoundError);
}

TEST_CASE("concurrent votes are all counted") {
  testutil::TempDir dir;
  auto index = ContentIndex::open(dir / "log.ndjson");
  index->insert(entry("s#0", "dog", 0.5));
  index->insert(entry("s#1", "dog", 0.7));

  SUBCASE("five simultaneous correct votes") {
    std::vector<std::thread> threads;
    for (int i = 0; i < 5; ++i) threads.emplace_back([&] { index->record_feedback(vote("s#0", Verdict::kCorrect)); });
    for (auto& t : threads) t.join();
    CHECK(index->get("s#0")->correct_votes == 5);
  }
  SUBCASE("writers and readers under load") {
    std::atomic<bool> done{false};
    std::atomic<bool> torn{false};
    std::thread reader([&] {
      while (!done) {
        const auto top = index->query_by_class_topk("dog", 2);
        if (top.size() != 2) torn = true;
        const auto e = index->get("s#1");
        if (!e || e->segment_id != "s#1") torn = true;
      }
    });
    std::vector<std::thread> writers;
    for (int w = 0; w < 6; ++w)
      writers.emplace_back([&, w] {
        for (int i = 0; i < 50; ++i)
          index->record_feedback(vote("s#1", (w + i) % 3 ? Verdict::kCorrect : Verdict::kIncorrect));
      });
    for (auto& t : writers) t.join();
    done = true;
    reader.join();
    CHECK_FALSE(torn);
    const auto e = *index->get("s#1");
    CHECK(e.correct_votes + e.incorrect_votes == 300);
    const auto reloaded = ContentIndex::load(dir / "log.ndjson").index;
    CHECK(reloaded->get("s#1") == e);
  }
}

TEST_CASE("log replay reproduces the index") {
  testutil::TempDir dir;
  const auto path = dir / "idx.ndjson";
  std::vector<IndexEntry> expected;
  {
    auto index = ContentIndex::open(path);
    for (const auto& e : random_entries(300, 5)) index->insert(e);
    index->insert(entry("m1#0", "class1", 0.42));
    index->record_feedback(vote("m1#0", Verdict::kCorrect));
    index->insert(entry("m1#0", "class2", 0.43));  // keeps the vote
    index->record_feedback(vote("m1#0", Verdict::kIncorrect));
    expected = index->entries();
  }
  auto reopened = ContentIndex::open(path);
  CHECK(reopened->entries() == expected);
  CHECK(reopened->get("m1#0")->correct_votes == 1);

  SUBCASE("persist to another file and load") {
    reopened->persist(dir / "copy.ndjson");
    auto loaded = ContentIndex::load(dir / "copy.ndjson");
    CHECK(loaded.report.records_applied == expected.size());
    CHECK(loaded.index->entries() == expected);
    CHECK(loaded.index->stats().feedback_count == reopened->stats().feedback_count);
    CHECK_THROWS_AS(reopened->persist(path), InvalidInputError);
  }
  SUBCASE("compaction is idempotent") {
    reopened->compact();
    const std::string first = slurp(path);
    reopened->compact();
    CHECK(slurp(path) == first);
    CHECK(std::count(first.begin(), first.end(), '\n') == std::ptrdiff_t(expected.size()));
    CHECK(ContentIndex::open(path)->entries() == expected);
    // Appends still work after compaction.
    reopened->record_feedback(vote("m1#0", Verdict::kCorrect));
    CHECK(ContentIndex::load(path).index->get("m1#0")->correct_votes == 2);
  }
}

TEST_CASE("truncated tail and corrupt records") {
  testutil::TempDir dir;
  const auto path = dir / "idx.ndjson";
  {
    auto index = ContentIndex::open(path);
    for (int i = 0; i < 5; ++i) index->insert(entry("m" + std::to_string(i) + "#0", "dog", 0.5 + i / 10.0));
  }
  const std::string good = slurp(path);

  SUBCASE("truncated final line") {
    {
      std::ofstream out(path, std::ios::app | std::ios::binary);
      out << R"({"type":"entry","segment_id":"m9#0","conf)";
    }
    const auto loaded = ContentIndex::load(path);
    CHECK(loaded.report.records_applied == 5);
    CHECK(loaded.report.skipped == 1);
    CHECK_FALSE(loaded.report.error_line);
    CHECK(loaded.index->size() == 5);
    // Opening for writing trims the partial record so appends stay parseable.
    auto index = ContentIndex::open(path);
    index->insert(entry("m7#0", "dog", 0.1));
    CHECK(ContentIndex::load(path).index->size() == 6);
  }
  SUBCASE("corrupt record in the middle") {
    const auto second_nl = good.find('\n', good.find('\n') + 1);
    std::string bad = good.substr(0, second_nl + 1) + "{not json}\n" + good.substr(second_nl + 1);
    {
      std::ofstream out(path, std::ios::trunc | std::ios::binary);
      out << bad;
    }
    const auto loaded = ContentIndex::load(path);
    CHECK(loaded.report.error_line == 3u);
    CHECK(loaded.index->size() == 2);
    try {
      ContentIndex::open(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
}

TEST_CASE("stats") {
  ContentIndex index;
  auto s = index.stats();
  CHECK(s.segment_count == 0);
  CHECK(s.hours_indexed == 0.0);
  CHECK(s.per_class_counts.empty());
  CHECK(s.feedback_count == 0);

  index.insert(entry("a#0", "dog", 0.5));
  index.insert(entry("a#1", "dog", 0.6));
  index.insert(entry("b#0", "rain", 0.7));
  index.record_feedback(vote("a#0", Verdict::kCorrect));
  s = index.stats();
  CHECK(s.segment_count == 3);
  CHECK(s.hours_indexed == doctest::Approx(3 * 2.3 / 3600));
  CHECK(s.per_class_counts == std::map<std::string, std::size_t>{{"dog", 2}, {"rain", 1}});
  CHECK(s.feedback_count == 1);
  CHECK(hours_for_segments(4000000) == doctest::Approx(2555.5555).epsilon(1e-6));
}

TEST_CASE("ten thousand inserts are counted") {
  ContentIndex index;
  for (const auto& e : random_entries(10000, 1)) index.insert(e);
  CHECK(index.stats().segment_count == 10000);
  CHECK(index.stats().hours_indexed == doctest::Approx(10000 * 2.3 / 3600));
}

TEST_CASE("votes never decrease under random operation sequences") {
  std::mt19937_64 rng(77);
  ContentIndex index;
  std::map<std::string, Tallies> last;
  std::uniform_int_distribution<int> op(0, 2), id(0, 9), coin(0, 1);
  for (int step = 0; step < 2000; ++step) {
    const std::string sid = "m" + std::to_string(id(rng)) + "#0";
    switch (op(rng)) {
      case 0:
        index.insert(entry(sid, coin(rng) ? "a" : "b", double(id(rng)) / 10));
        break;
      default:
        if (index.get(sid)) index.record_feedback(vote(sid, coin(rng) ? Verdict::kCorrect : Verdict::kIncorrect));
    }
    for (const auto& e : index.entries()) {
      auto& t = last[e.segment_id];
      REQUIRE(e.correct_votes >= t.correct);
      REQUIRE(e.incorrect_votes >= t.incorrect);
      t = {e.correct_votes, e.incorrect_votes};
    }
  }
}
