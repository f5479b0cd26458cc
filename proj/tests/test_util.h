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
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nels/audio.h"
#include "nels/content_index.h"
#include "nels/crawler.h"
#include "nels/errors.h"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "nels") {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> sine(double hz, double amplitude, std::size_t n, int sr = nels::kCanonicalSampleRate,
                                double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * double(i) / sr + phase);
  return x;
}

inline nels::Waveform canonical(std::vector<double> samples) {
  return nels::Waveform{std::move(samples), nels::kCanonicalSampleRate};
}

inline nels::RawItem raw_item(const std::string& id, double duration, const std::string& title = "t") {
  nels::RawItem r;
  r.fields = {{"id", id}, {"url", "u/" + id}, {"title", title}, {"duration", std::to_string(duration)}};
  r.audio_ref = id;
  return r;
}

// Valid index entry whose runner-up score is half the winner's.
inline nels::IndexEntry index_entry(const std::string& id, const std::string& label, double conf,
                                    const std::string& crawl = "") {
  nels::IndexEntry e;
  e.segment_id = id;
  e.media_id = id.substr(0, id.find('#'));
  e.offset_s = 2.3;
  e.predicted_class = label;
  e.confidence = conf;
  e.top_scores = {{label, conf}, {"other", conf / 2}};
  e.crawl_label = crawl.empty() ? label : crawl;
  e.metadata.media_id = e.media_id;
  e.metadata.url = "https://v/" + e.media_id;
  e.metadata.title = "title of " + e.media_id;
  e.metadata.duration_s = 30;
  e.metadata.keywords = {"k1", "k2"};
  e.indexed_at = "2024-01-01T00:00:00.000Z";
  return e;
}

// Scripted source for crawler tests.
class StubSource : public nels::MediaSource {
 public:
  std::vector<nels::RawItem> items;
  int failures_before_success = 0;  // search() throws CrawlError this many times
  std::atomic<int> search_calls{0};

  std::string name() const override { return "stub"; }
  std::vector<nels::RawItem> search(const std::string&, std::size_t) override {
    if (search_calls++ < failures_before_success) throw nels::CrawlError("stub outage");
    return items;
  }
  nels::RawItem resolve(const std::string& url) override {
    for (const auto& i : items)
      if (i.fields.at("url") == url) return i;
    throw nels::CrawlError("unknown " + url);
  }
  nels::DecodedAudio fetch_audio(const nels::RawItem&) override { throw nels::CrawlError("no audio in stub"); }
};

}  // namespace testutil
