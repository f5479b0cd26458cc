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

#include "nels/pipeline.h"

#include <atomic>
#include <iostream>
#include <thread>

#include "nels/errors.h"
#include "nels/features.h"

namespace nels {

std::vector<CrawlJob> round_robin_jobs(const Vocabulary& classes, std::size_t per_label_limit) {
  std::vector<CrawlJob> jobs;
  jobs.reserve(classes.size());
  for (const auto& c : classes.classes()) jobs.push_back(make_crawl_job(c, per_label_limit));
  return jobs;
}

CrawlSummary run_crawl(const std::vector<CrawlJob>& jobs, MediaSource& source,
                       const std::function<void(CrawledItem&&)>& sink, const CrawlOptions& options) {
  CrawlSummary summary;
  summary.jobs = jobs.size();
  CrawlCounters counters;
  std::atomic<std::size_t> next{0}, failed{0}, retries{0}, sink_failures{0};
  BoundedQueue<CrawledItem> queue(options.queue_capacity);

  std::thread consumer([&] {
    while (auto item = queue.pop()) {
      const std::string media_id = item->record.media_id;
      try {
        sink(std::move(*item));
      } catch (const std::exception& e) {
        ++sink_failures;
        std::cerr << "nels: indexing " << media_id << " failed: " << e.what() << '\n';
      }
    }
  });

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const CrawlJob& job = jobs[i];
      for (int attempt = 1;; ++attempt) {
        try {
          for (auto& item : crawl_once(job, source, &counters)) queue.push(std::move(item));
          break;
        } catch (const CrawlError& e) {
          if (attempt >= options.max_attempts) {
            ++failed;
            std::cerr << "nels: job '" << job.query << "' abandoned: " << e.what() << '\n';
            break;
          }
          ++retries;
          std::this_thread::sleep_for(options.retry_backoff * attempt);
        }
      }
    }
  };

  std::vector<std::thread> workers;
  const std::size_t n = std::max<std::size_t>(1, std::min(options.workers, std::max<std::size_t>(1, jobs.size())));
  for (std::size_t w = 0; w < n; ++w) workers.emplace_back(worker);
  for (auto& t : workers) t.join();
  queue.close();
  consumer.join();

  summary.failed_jobs = failed;
  summary.retries = retries;
  summary.emitted = counters.emitted;
  summary.rejected_duration = counters.rejected_duration;
  summary.skipped = counters.skipped;
  summary.sink_failures = sink_failures;
  return summary;
}

MediaAnalysis analyze_audio(const Model& model, const DecodedAudio& audio, const std::string& media_id) {
  MediaAnalysis out;
  out.segments = segment_waveform(canonicalize_audio(audio), media_id);
  std::vector<Prediction> preds;
  preds.reserve(out.segments.size());
  for (auto& seg : out.segments) {
    preds.push_back(predict(model, log_mel_features(seg)));
    seg.samples.clear();
    seg.samples.shrink_to_fit();
  }
  out.dominant = dominant_sound(model.classes, std::move(preds));
  return out;
}

std::size_t Indexer::index_item(const CrawledItem& item) {
  const auto analysis = analyze_audio(model_, source_.fetch_audio(item.source_item), item.record.media_id);
  for (std::size_t i = 0; i < analysis.segments.size(); ++i) {
    index_.insert(make_index_entry(analysis.segments[i], analysis.dominant.per_segment[i].scores,
                                   model_.classes, item.crawl_label, item.record));
  }
  return analysis.segments.size();
}

}  // namespace nels
