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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "nels/vocabulary.h"
#include "nels/wav.h"

namespace nels {

inline constexpr double kMinMediaSeconds = 2.0;
inline constexpr double kMaxMediaSeconds = 600.0;

// "<label> sound" with whitespace collapsed; casing preserved.
// Throws InvalidLabelError for an empty or blank label.
std::string formulate_query(std::string_view label);

// True iff 2 s <= duration <= 600 s. Throws InvalidDurationError when
// negative or not finite.
bool admit_media(double duration_s);

// The twelve metadata attributes kept per crawled recording.
struct MediaRecord {
  std::string media_id;
  std::string url;
  std::string title;
  std::optional<std::string> description;
  double duration_s = 0.0;
  std::optional<std::string> upload_date;  // ISO 8601 YYYY-MM-DD
  std::optional<std::string> uploader;
  std::optional<std::uint64_t> view_count;
  std::optional<std::uint64_t> like_count;
  std::optional<std::string> category;
  std::vector<std::string> keywords;
  std::optional<std::string> thumbnail_url;

  friend bool operator==(const MediaRecord&, const MediaRecord&) = default;
};

inline constexpr std::size_t kMediaRecordAttributes = 12;

// Source-specific item: raw key/value metadata plus a reference the source
// can turn back into audio.
struct RawItem {
  std::map<std::string, std::string> fields;
  std::string audio_ref;
};

// Maps raw keys to a MediaRecord. Aliases: id -> media_id,
// duration -> duration_s, thumbnail -> thumbnail_url, tags -> keywords.
// Keywords are comma separated. Throws MetadataIncompleteError when
// media_id, url, title or duration is missing or a present field is
// malformed, and InvalidDurationError for a negative duration.
MediaRecord extract_metadata(const RawItem& raw);

// Adapters must be safe to call from several crawl workers at once.
class MediaSource {
 public:
  virtual ~MediaSource() = default;

  virtual std::string name() const = 0;
  // Candidates for a query in source order; `hint` is the number of
  // candidates the caller hopes to use. Throws CrawlError.
  virtual std::vector<RawItem> search(const std::string& query, std::size_t hint) = 0;
  // Looks up a user-supplied media link. Throws CrawlError when the link
  // cannot be served by this adapter.
  virtual RawItem resolve(const std::string& url) = 0;
  // Throws CrawlError or InvalidAudioError.
  virtual DecodedAudio fetch_audio(const RawItem& item) = 0;
};

// A directory of <media_id>.<ext> audio files with <media_id>.meta sidecars
// (UTF-8 key=value lines). A query matches an item when every query word
// other than "sound"/"sounds" occurs in its title, description or keywords.
class LocalCorpusSource : public MediaSource {
 public:
  explicit LocalCorpusSource(std::filesystem::path dir);

  std::string name() const override { return "local:" + dir_.string(); }
  std::vector<RawItem> search(const std::string& query, std::size_t hint) override;
  // Accepts "local:<media_id>", "file://<path>" or an item's own url.
  RawItem resolve(const std::string& url) override;
  DecodedAudio fetch_audio(const RawItem& item) override;

  // Picks up files added since construction.
  void rescan();
  std::size_t size() const;
  // Sidecars that could not be read during the last scan.
  std::size_t unreadable() const;

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  std::vector<RawItem> items_;  // ordered by media_id
  std::size_t unreadable_ = 0;
};

// Parses a sidecar file into raw fields.
std::map<std::string, std::string> read_sidecar(const std::filesystem::path& meta);
void write_sidecar(const std::filesystem::path& meta, const std::map<std::string, std::string>& fields);

// JSON-over-HTTP adapter:
//   GET <base>/search?q=<query>&limit=<n> -> [ {metadata...}, ... ]
//   GET <base>/resolve?url=<link>         -> {metadata...}
//   GET <audio_url>                       -> WAV bytes
// Each item may carry "audio_url"; otherwise <base>/audio?id=<media_id> is used.
class HttpMediaSource : public MediaSource {
 public:
  explicit HttpMediaSource(std::string base_url, int timeout_s = 30);

  std::string name() const override { return "http:" + base_url_; }
  std::vector<RawItem> search(const std::string& query, std::size_t hint) override;
  RawItem resolve(const std::string& url) override;
  DecodedAudio fetch_audio(const RawItem& item) override;

 private:
  std::string get(const std::string& url_or_path);

  std::string base_url_;
  int timeout_s_;
};

// "local:<dir>" or "http:<url>". Throws ConfigError.
std::unique_ptr<MediaSource> make_source(const std::string& spec);

struct CrawlJob {
  SoundClass sound_class;
  std::string query;
  std::size_t requested_limit = 1;
};

CrawlJob make_crawl_job(const SoundClass& sound_class, std::size_t limit);

struct CrawledItem {
  MediaRecord record;
  std::string crawl_label;
  RawItem source_item;
};

struct CrawlCounters {
  std::atomic<std::size_t> emitted{0};
  std::atomic<std::size_t> rejected_duration{0};
  std::atomic<std::size_t> skipped{0};
};

// One query against one source. Only admitted media are returned, at most
// requested_limit of them, in source order, each tagged with the job's
// label. Bad items are skipped and counted; a failing source raises
// CrawlError.
std::vector<CrawledItem> crawl_once(const CrawlJob& job, MediaSource& source,
                                    CrawlCounters* counters = nullptr);

}  // namespace nels
