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

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "nels/audio.h"
#include "nels/crawler.h"
#include "nels/vocabulary.h"

namespace nels {

inline constexpr std::size_t kMaxTopScores = 5;

struct ScoredClass {
  std::string label;
  double score = 0.0;

  friend bool operator==(const ScoredClass&, const ScoredClass&) = default;
};

// The indexed unit: one segment with the metadata of its parent media,
// the recognizer's prediction and the human feedback tallies.
struct IndexEntry {
  std::string segment_id;
  std::string media_id;
  double offset_s = 0.0;
  std::string predicted_class;
  double confidence = 0.0;
  std::vector<ScoredClass> top_scores;  // descending, at most five
  std::string crawl_label;
  MediaRecord metadata;
  std::uint64_t correct_votes = 0;
  std::uint64_t incorrect_votes = 0;
  std::string indexed_at;  // ISO 8601 UTC

  friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

enum class Verdict { kCorrect, kIncorrect };

std::string_view verdict_name(Verdict v);
// "correct"/"incorrect", case-insensitive.
std::optional<Verdict> parse_verdict(std::string_view s);

struct FeedbackEvent {
  std::string segment_id;
  std::string class_label;
  Verdict verdict = Verdict::kCorrect;
  std::string timestamp;  // filled in by the index when empty
};

struct Tallies {
  std::uint64_t correct = 0;
  std::uint64_t incorrect = 0;

  friend bool operator==(const Tallies&, const Tallies&) = default;
};

struct IndexStats {
  std::size_t segment_count = 0;
  double hours_indexed = 0.0;  // segment_count * 2.3 / 3600
  std::map<std::string, std::size_t> per_class_counts;
  std::uint64_t feedback_count = 0;  // total votes
};

double hours_for_segments(std::size_t segments);

struct LoadReport {
  std::size_t records_applied = 0;
  std::size_t skipped = 0;  // incomplete trailing record
  std::optional<std::size_t> error_line;
  std::string error_message;
};

std::string now_iso8601();

// Builds an entry from a prediction's score vector over `classes`.
IndexEntry make_index_entry(const AudioSegment& segment, const std::vector<double>& scores,
                            const Vocabulary& classes, const std::string& crawl_label,
                            const MediaRecord& metadata);

// Segment index backed by an append-only newline-delimited JSON log.
//
// Every mutation is written to the log before it becomes visible, and all
// mutations go through one exclusive lock; queries take a shared lock, so
// each query sees a consistent snapshot. Re-inserting a segment replaces
// its prediction fields and keeps its votes.
class ContentIndex {
 public:
  struct Options {
    bool fsync_each_write = false;
    // When set, predicted and crawl labels must belong to it.
    std::shared_ptr<const Vocabulary> vocabulary;
  };

  // In-memory index without a log.
  ContentIndex();
  explicit ContentIndex(Options options);
  ~ContentIndex();
  ContentIndex(const ContentIndex&) = delete;
  ContentIndex& operator=(const ContentIndex&) = delete;

  // Replays the log at `path` (creating it if absent) and appends to it from
  // then on. An incomplete final record is skipped and trimmed from the
  // file; any other bad record throws ParseError with its line number.
  static std::unique_ptr<ContentIndex> open(const std::filesystem::path& path, Options options);
  static std::unique_ptr<ContentIndex> open(const std::filesystem::path& path) {
    return open(path, Options{});
  }

  struct Loaded {
    std::unique_ptr<ContentIndex> index;
    LoadReport report;
  };
  // Read-only replay. Stops at the first bad record, keeping everything
  // before it, and reports where it stopped.
  static Loaded load(const std::filesystem::path& path, Options options);
  static Loaded load(const std::filesystem::path& path) { return load(path, Options{}); }

  // Throws InvalidInputError for an invalid entry and StorageError when the
  // log write fails (the entry is then not visible).
  void insert(IndexEntry entry);
  std::optional<IndexEntry> get(std::string_view segment_id) const;

  // Entries predicted as `label`, by confidence descending then segment_id
  // ascending, at most k. Unknown labels give an empty list.
  std::vector<IndexEntry> query_by_class_topk(std::string_view label, std::size_t k) const;

  // Throws NotFoundError for an unknown segment.
  Tallies record_feedback(const FeedbackEvent& event);

  IndexStats stats() const;
  std::size_t size() const;
  // All entries ordered by segment_id.
  std::vector<IndexEntry> entries() const;

  // Writes a compacted log (one record per entry, segment_id order) to path.
  void persist(const std::filesystem::path& path) const;
  // Rewrites the attached log in compacted form. No-op when in memory.
  void compact();

  const std::optional<std::filesystem::path>& log_path() const { return path_; }

 private:
  struct RankKey {
    double confidence;
    std::string segment_id;
    bool operator<(const RankKey& o) const {
      if (confidence != o.confidence) return confidence > o.confidence;
      return segment_id < o.segment_id;
    }
  };

  void validate(const IndexEntry& e) const;
  // Applies without logging; caller holds the write lock.
  void apply_entry(IndexEntry entry);
  Tallies apply_feedback(const FeedbackEvent& event);
  void append_line(const std::string& line);
  void write_compacted(const std::filesystem::path& path) const;
  LoadReport replay(const std::filesystem::path& path, bool stop_on_error, std::size_t* good_bytes);

  Options options_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, IndexEntry, std::less<>> entries_;
  std::map<std::string, std::set<RankKey>, std::less<>> by_class_;
  std::optional<std::filesystem::path> path_;
  std::FILE* log_ = nullptr;
};

}  // namespace nels
