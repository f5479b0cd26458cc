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

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "nels/audio.h"
#include "nels/classifier.h"
#include "nels/content_index.h"
#include "nels/crawler.h"

namespace nels {

// Multi-producer multi-consumer FIFO with a fixed capacity. push() blocks
// while the queue is full, which is how a slow consumer throttles the
// crawl workers.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  // Returns false, dropping the item, once the queue is closed.
  bool push(T item) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  // Blocks until an item is available; nullopt when closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }
  std::size_t capacity() const { return capacity_; }

 private:
  const std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

// One crawl job per label in vocabulary order; run_crawl hands them to
// workers in that order, which gives a round-robin pass over the labels.
std::vector<CrawlJob> round_robin_jobs(const Vocabulary& classes, std::size_t per_label_limit);

struct CrawlOptions {
  std::size_t workers = 2;
  std::size_t queue_capacity = 16;
  int max_attempts = 3;  // per job, for retriable source errors
  std::chrono::milliseconds retry_backoff{50};
};

struct CrawlSummary {
  std::size_t jobs = 0;
  std::size_t failed_jobs = 0;
  std::size_t retries = 0;
  std::size_t emitted = 0;
  std::size_t rejected_duration = 0;
  std::size_t skipped = 0;       // bad items at the source
  std::size_t sink_failures = 0;  // items the sink threw on
};

// Runs the jobs on a worker pool. Items flow through a BoundedQueue to a
// single consumer thread that calls `sink`, so the sink needs no locking.
// A job whose source keeps failing is counted and abandoned; the rest go on.
CrawlSummary run_crawl(const std::vector<CrawlJob>& jobs, MediaSource& source,
                       const std::function<void(CrawledItem&&)>& sink, const CrawlOptions& options = {});

// Canonicalized audio classified segment by segment.
struct MediaAnalysis {
  std::vector<AudioSegment> segments;  // samples released after scoring
  DominantSound dominant;
};

MediaAnalysis analyze_audio(const Model& model, const DecodedAudio& audio, const std::string& media_id);

// Fetch, canonicalize, segment, extract, classify and insert every segment
// of crawled media into an index.
class Indexer {
 public:
  Indexer(const Model& model, MediaSource& source, ContentIndex& index)
      : model_(model), source_(source), index_(index) {}

  // Returns the number of segments inserted.
  std::size_t index_item(const CrawledItem& item);

 private:
  const Model& model_;
  MediaSource& source_;
  ContentIndex& index_;
};

}  // namespace nels
