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

#include "nels/errors.h"
#include "nels/evaluation.h"
#include "../oracles.h"
#include "../test_util.h"

using namespace nels;

namespace {

SoundClass cls(const std::string& label) { return {label, Dataset::kCustom, 0}; }

FeedbackEvent vote(const std::string& id, Verdict v) { return {id, "q", v, ""}; }

// Recount by brute force over a snapshot of entries.
std::optional<double> recount(const std::vector<IndexEntry>& all, const std::string& label, std::size_t k,
                              bool human) {
  std::size_t judged = 0, correct = 0;
  for (const auto& e : oracle::topk(all, label, k)) {
    if (human) {
      if (e.correct_votes + e.incorrect_votes == 0) continue;
      ++judged;
      if (e.correct_votes * 2 > e.correct_votes + e.incorrect_votes) ++correct;
    } else {
      ++judged;
      if (e.crawl_label == label) ++correct;
    }
  }
  if (judged == 0) return std::nullopt;
  return double(correct) / double(judged);
}

}  // namespace

TEST_CASE("human judgment uses a strict majority") {
  auto e = testutil::index_entry("a#0", "dog", 0.5);
  CHECK_FALSE(human_judgment(e));
  e.correct_votes = 2;
  e.incorrect_votes = 2;
  CHECK(human_judgment(e) == false);
  e.correct_votes = 3;
  CHECK(human_judgment(e) == true);
  e.correct_votes = 0;
  e.incorrect_votes = 1;
  CHECK(human_judgment(e) == false);
}

TEST_CASE("precision at k") {
  ContentIndex index;
  for (int i = 0; i < 50; ++i) {
    // 30 of the 40 highest-confidence segments came from a "dog" crawl.
    const std::string crawl = (i < 40 ? i % 4 != 0 : true) ? "dog" : "cat";
    index.insert(testutil::index_entry("m" + std::to_string(100 + i) + "#0", "dog", 1.0 - i / 100.0, crawl));
  }
  const auto q = precision_at_k(index, cls("dog"), 40, Reference::kQuery);
  CHECK(q.judged == 40);
  CHECK(q.correct == 30);
  CHECK(*q.precision == 0.75);

  const auto h = precision_at_k(index, cls("dog"), 40, Reference::kHuman);
  CHECK(h.judged == 0);
  CHECK_FALSE(h.precision);

  CHECK_THROWS_AS(precision_at_k(index, cls("dog"), 0, Reference::kQuery), InvalidInputError);
  CHECK_FALSE(precision_at_k(index, cls("owl"), 40, Reference::kQuery).precision);

  SUBCASE("feedback moves the human reference only") {
    index.record_feedback(vote("m100#0", Verdict::kCorrect));
    index.record_feedback(vote("m101#0", Verdict::kIncorrect));
    index.record_feedback(vote("m102#0", Verdict::kCorrect));
    index.record_feedback(vote("m102#0", Verdict::kIncorrect));
    const auto h2 = precision_at_k(index, cls("dog"), 40, Reference::kHuman);
    CHECK(h2.judged == 3);
    CHECK(h2.correct == 1);
    CHECK(precision_at_k(index, cls("dog"), 40, Reference::kQuery).precision == q.precision);
  }
}

TEST_CASE("precision agrees with a brute-force recount") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> c(0, 4), conf(1, 60), votes(0, 3), coin(0, 3);
  ContentIndex index;
  for (int i = 0; i < 2000; ++i) {
    const std::string label = "c" + std::to_string(c(rng));
    auto e = testutil::index_entry("m" + std::to_string(i) + "#0", label, conf(rng) / 60.0,
                                   coin(rng) ? label : "c9");
    e.correct_votes = std::uint64_t(votes(rng));
    e.incorrect_votes = std::uint64_t(votes(rng));
    index.insert(e);
  }
  const auto all = index.entries();
  std::vector<SoundClass> vocab;
  for (int i = 0; i < 6; ++i) vocab.push_back(cls("c" + std::to_string(i)));
  for (std::size_t k : {std::size_t(1), std::size_t(7), std::size_t(40), std::size_t(1000)}) {
    const auto report = compare_references(index, vocab, k);
    double sum = 0;
    std::size_t n = 0;
    for (const auto& d : report.per_class) {
      const auto h = recount(all, d.sound_class.label, k, true);
      const auto q = recount(all, d.sound_class.label, k, false);
      CHECK(d.p_human == h);
      CHECK(d.p_query == q);
      if (h && q) {
        CHECK(*d.delta == doctest::Approx(std::fabs(*h - *q)));
        sum += std::fabs(*h - *q);
        ++n;
      }
    }
    CHECK(report.undefined_classes == std::vector<std::string>{"c5"});
    CHECK(*report.mean_abs_delta == doctest::Approx(sum / double(n)));
    // Same input, same answer.
    const auto again = compare_references(index, vocab, k);
    CHECK(again.mean_abs_delta == report.mean_abs_delta);
  }
}

TEST_CASE("divergence csv") {
  ContentIndex index;
  index.insert(testutil::index_entry("a#0", "dog", 0.9));
  index.insert(testutil::index_entry("a#1", "dog", 0.8, "cat"));
  index.insert(testutil::index_entry("a#2", "dog", 0.7));
  index.record_feedback(vote("a#0", Verdict::kCorrect));
  index.record_feedback(vote("a#1", Verdict::kCorrect));
  const auto report = compare_references(index, {cls("dog"), cls("owl, barn")}, 40);
  std::ostringstream out;
  write_divergence_csv(out, report);
  CHECK(out.str() ==
        "class,k,p_human,judged,p_query,delta\n"
        "dog,40,1.000000,2,0.666667,0.333333\n"
        "\"owl, barn\",40,,0,,\n");

  testutil::TempDir dir;
  write_divergence_csv(dir / "r.csv", report);
  std::ifstream in(dir / "r.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == out.str());
  CHECK_THROWS_AS(write_divergence_csv(dir / "missing" / "r.csv", report), StorageError);
}
