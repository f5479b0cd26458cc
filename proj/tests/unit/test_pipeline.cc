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

#include <atomic>
#include <numeric>
#include <set>
#include <thread>

#include "nels/errors.h"
#include "nels/pipeline.h"
#include "../fixtures.h"
#include "../test_util.h"

using namespace nels;
using namespace std::chrono_literals;

TEST_CASE("bounded queue") {
  SUBCASE("fifo") {
    BoundedQueue<int> q(4);
    for (int i = 0; i < 4; ++i) CHECK(q.push(i));
    for (int i = 0; i < 4; ++i) CHECK(q.pop() == i);
  }
  SUBCASE("push blocks while full") {
    BoundedQueue<int> q(2);
    q.push(1);
    q.push(2);
    std::atomic<bool> pushed{false};
    std::thread producer([&] {
      q.push(3);
      pushed = true;
    });
    std::this_thread::sleep_for(50ms);
    CHECK_FALSE(pushed);
    CHECK(q.size() == 2);
    CHECK(q.pop() == 1);
    producer.join();
    CHECK(pushed);
    CHECK(q.size() == 2);
  }
  SUBCASE("close releases blocked producers and drains") {
    BoundedQueue<int> q(1);
    q.push(1);
    std::atomic<int> result{-1};
    std::thread producer([&] { result = q.push(2) ? 1 : 0; });
    std::this_thread::sleep_for(20ms);
    q.close();
    producer.join();
    CHECK(result == 0);
    CHECK(q.pop() == 1);
    CHECK_FALSE(q.pop());
  }
  SUBCASE("zero capacity is treated as one") { CHECK(BoundedQueue<int>(0).capacity() == 1); }
  SUBCASE("many producers and consumers lose nothing") {
    BoundedQueue<int> q(3);
    std::atomic<long> sum{0};
    std::atomic<int> count{0};
    std::vector<std::thread> consumers, producers;
    for (int c = 0; c < 3; ++c)
      consumers.emplace_back([&] {
        while (auto v = q.pop()) {
          sum += *v;
          ++count;
        }
      });
    for (int p = 0; p < 4; ++p)
      producers.emplace_back([&, p] {
        for (int i = 1; i <= 1000; ++i) q.push(p * 1000 + i);
      });
    for (auto& t : producers) t.join();
    q.close();
    for (auto& t : consumers) t.join();
    long expected = 0;
    for (int p = 0; p < 4; ++p)
      for (int i = 1; i <= 1000; ++i) expected += p * 1000 + i;
    CHECK(count == 4000);
    CHECK(sum == expected);
  }
}

TEST_CASE("round robin jobs follow vocabulary order") {
  Vocabulary v;
  v.add("dog", Dataset::kEsc50);
  v.add("car horn", Dataset::kUs8k);
  const auto jobs = round_robin_jobs(v, 7);
  REQUIRE(jobs.size() == 2);
  CHECK(jobs[0].query == "dog sound");
  CHECK(jobs[1].query == "car horn sound");
  CHECK(jobs[1].requested_limit == 7);
}

TEST_CASE("run_crawl") {
  testutil::StubSource source;
  source.items = {testutil::raw_item("a", 30), testutil::raw_item("b", 1.0), testutil::raw_item("c", 601),
                  testutil::raw_item("d", 2.0)};
  source.items.push_back(nels::RawItem{{{"id", "broken"}}, "broken"});
  Vocabulary v;
  v.add("dog", Dataset::kEsc50);
  v.add("rain", Dataset::kEsc50);
  CrawlOptions opts;
  opts.retry_backoff = 1ms;

  SUBCASE("admission and per-item failures") {
    std::vector<CrawledItem> got;
    const auto s = run_crawl(round_robin_jobs(v, 10), source, [&](CrawledItem&& i) { got.push_back(std::move(i)); },
                             opts);
    CHECK(s.jobs == 2);
    CHECK(s.failed_jobs == 0);
    CHECK(s.emitted == 4);
    CHECK(s.rejected_duration == 4);
    CHECK(s.skipped == 2);
    REQUIRE(got.size() == 4);
    std::multiset<std::string> labels;
    for (const auto& i : got) {
      CHECK(admit_media(i.record.duration_s));
      labels.insert(i.crawl_label);
    }
    CHECK(labels == std::multiset<std::string>{"dog", "dog", "rain", "rain"});
  }
  SUBCASE("transient source errors are retried") {
    source.failures_before_success = 2;
    opts.workers = 1;
    std::size_t n = 0;
    const auto s = run_crawl(round_robin_jobs(v.subset({"dog"}), 10), source, [&](CrawledItem&&) { ++n; }, opts);
    CHECK(s.retries == 2);
    CHECK(s.failed_jobs == 0);
    CHECK(n == 2);
  }
  SUBCASE("a source that keeps failing abandons the job") {
    source.failures_before_success = 100;
    const auto s = run_crawl(round_robin_jobs(v, 10), source, [](CrawledItem&&) {}, opts);
    CHECK(s.failed_jobs == 2);
    CHECK(s.emitted == 0);
    CHECK(source.search_calls == 2 * opts.max_attempts);
  }
  SUBCASE("sink failures are counted, not fatal") {
    std::size_t ok = 0;
    const auto s = run_crawl(round_robin_jobs(v, 10), source,
                             [&](CrawledItem&& i) {
                               if (i.record.media_id == "a") throw StorageError("disk full");
                               ++ok;
                             },
                             opts);
    CHECK(s.sink_failures == 2);
    CHECK(ok == 2);
  }
  SUBCASE("limit caps admitted items per job") {
    std::size_t n = 0;
    run_crawl(round_robin_jobs(v, 1), source, [&](CrawledItem&&) { ++n; }, opts);
    CHECK(n == 2);
  }
}

TEST_CASE("crawl and index a synthetic corpus") {
  const auto& world = testutil::synth_world();
  LocalCorpusSource source(world.corpus_dir);
  ContentIndex index;
  Indexer indexer(world.model, source, index);

  std::size_t inserted = 0, expected_segments = 0;
  CrawlOptions opts;
  opts.workers = 3;
  const auto summary = run_crawl(round_robin_jobs(world.corpus.classes, 3), source,
                                 [&](CrawledItem&& item) {
                                   const auto audio = source.fetch_audio(item.source_item);
                                   expected_segments += segment_count(audio.channels.front().size());
                                   inserted += indexer.index_item(item);
                                 },
                                 opts);
  CHECK(summary.emitted == 12);
  CHECK(summary.failed_jobs == 0);
  CHECK(inserted == expected_segments);
  CHECK(index.size() == inserted);

  std::size_t agree = 0;
  for (const auto& e : index.entries()) {
    CHECK(e.top_scores.size() == 4);
    CHECK(e.confidence == e.top_scores.front().score);
    CHECK(e.metadata.media_id == e.media_id);
    CHECK(world.corpus.classes.contains(e.crawl_label));
    if (e.predicted_class == e.crawl_label) ++agree;
  }
  CHECK(double(agree) / double(index.size()) >= 0.9);

  for (const auto& c : world.corpus.classes.classes()) {
    const auto top = index.query_by_class_topk(c.label, 100);
    for (std::size_t i = 1; i < top.size(); ++i) CHECK(top[i].confidence <= top[i - 1].confidence);
  }
}

TEST_CASE("analyze_audio reports the dominant class") {
  const auto& world = testutil::synth_world();
  SynthOptions opts;
  std::mt19937_64 rng(5);
  const auto audio = synth_clip(default_synth_classes()[1], 7.0, opts, rng);
  const auto a = analyze_audio(world.model, audio, "clip");
  CHECK(a.segments.size() == 3);
  for (const auto& s : a.segments) CHECK(s.samples.empty());
  CHECK(a.dominant.dominant.label == "mid tone");
  CHECK(a.dominant.per_segment.size() == 3);
}
