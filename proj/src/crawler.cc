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

#include "nels/crawler.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "nels/errors.h"

namespace nels {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

const std::string* find_field(const RawItem& raw, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto it = raw.fields.find(k);
    if (it != raw.fields.end()) return &it->second;
  }
  return nullptr;
}

std::optional<std::string> optional_text(const RawItem& raw, std::initializer_list<const char*> keys) {
  const std::string* v = find_field(raw, keys);
  if (!v) return std::nullopt;
  return *v;
}

std::optional<std::uint64_t> optional_count(const RawItem& raw, const char* key) {
  const std::string* v = find_field(raw, {key});
  if (!v) return std::nullopt;
  const std::string t = trim(*v);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw MetadataIncompleteError(std::string("malformed ") + key + " '" + *v + "'");
  return out;
}

std::string normalize_date(const std::string& raw) {
  std::string digits;
  const std::string t = trim(raw);
  if (t.size() == 10 && t[4] == '-' && t[7] == '-') {
    digits = t.substr(0, 4) + t.substr(5, 2) + t.substr(8, 2);
  } else {
    digits = t;
  }
  const bool ok_shape = digits.size() == 8 &&
                        std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); });
  if (ok_shape) {
    const int y = std::stoi(digits.substr(0, 4));
    const unsigned m = unsigned(std::stoi(digits.substr(4, 2)));
    const unsigned d = unsigned(std::stoi(digits.substr(6, 2)));
    if (std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}.ok())
      return digits.substr(0, 4) + "-" + digits.substr(4, 2) + "-" + digits.substr(6, 2);
  }
  throw MetadataIncompleteError("malformed upload_date '" + raw + "'");
}

}  // namespace

std::string formulate_query(std::string_view label) {
  std::string out;
  std::istringstream ss{std::string(label)};
  for (std::string tok; ss >> tok;) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  if (out.empty()) throw InvalidLabelError("sound label is empty");
  return out + " sound";
}

bool admit_media(double duration_s) {
  if (!std::isfinite(duration_s) || duration_s < 0.0)
    throw InvalidDurationError("duration must be a non-negative number of seconds");
  return duration_s >= kMinMediaSeconds && duration_s <= kMaxMediaSeconds;
}

MediaRecord extract_metadata(const RawItem& raw) {
  MediaRecord r;
  auto required = [&](std::initializer_list<const char*> keys, const char* name) {
    const std::string* v = find_field(raw, keys);
    if (!v || trim(*v).empty()) throw MetadataIncompleteError(std::string("missing ") + name);
    return *v;
  };
  r.media_id = trim(required({"media_id", "id"}, "media_id"));
  r.url = trim(required({"url"}, "url"));
  r.title = required({"title"}, "title");

  const std::string dur = trim(required({"duration_s", "duration"}, "duration"));
  char* end = nullptr;
  const double d = std::strtod(dur.c_str(), &end);
  if (end == dur.c_str() || *end != '\0' || !std::isfinite(d))
    throw MetadataIncompleteError("malformed duration '" + dur + "'");
  if (d < 0.0) throw InvalidDurationError("negative duration " + dur);
  r.duration_s = d;

  r.description = optional_text(raw, {"description"});
  if (auto date = optional_text(raw, {"upload_date"})) r.upload_date = normalize_date(*date);
  r.uploader = optional_text(raw, {"uploader"});
  r.view_count = optional_count(raw, "view_count");
  r.like_count = optional_count(raw, "like_count");
  r.category = optional_text(raw, {"category"});
  if (const std::string* kw = find_field(raw, {"keywords", "tags"})) {
    std::stringstream ss(*kw);
    for (std::string piece; std::getline(ss, piece, ',');) {
      piece = trim(piece);
      if (!piece.empty()) r.keywords.push_back(std::move(piece));
    }
  }
  r.thumbnail_url = optional_text(raw, {"thumbnail_url", "thumbnail"});
  return r;
}

std::map<std::string, std::string> read_sidecar(const std::filesystem::path& meta) {
  std::ifstream in(meta);
  if (!in) throw CrawlError("cannot read sidecar " + meta.string());
  std::map<std::string, std::string> fields;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, meta.string() + ": expected key=value");
    fields[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return fields;
}

void write_sidecar(const std::filesystem::path& meta, const std::map<std::string, std::string>& fields) {
  std::ofstream out(meta);
  if (!out) throw StorageError("cannot write sidecar " + meta.string());
  for (const auto& [k, v] : fields) out << k << '=' << v << '\n';
}

LocalCorpusSource::LocalCorpusSource(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!std::filesystem::is_directory(dir_)) throw CrawlError("corpus directory does not exist: " + dir_.string());
  rescan();
}

void LocalCorpusSource::rescan() {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::directory_iterator it(dir_, ec);
  if (ec) throw CrawlError("cannot list corpus directory " + dir_.string() + ": " + ec.message());

  std::map<std::string, fs::path> audio;  // stem -> audio file
  std::vector<fs::path> sidecars;
  for (const auto& entry : it) {
    if (!entry.is_regular_file()) continue;
    const auto& p = entry.path();
    if (p.extension() == ".meta") {
      sidecars.push_back(p);
    } else {
      audio.emplace(p.stem().string(), p);
    }
  }
  std::sort(sidecars.begin(), sidecars.end());

  std::vector<RawItem> items;
  std::size_t unreadable = 0;
  for (const auto& meta : sidecars) {
    RawItem item;
    try {
      item.fields = read_sidecar(meta);
    } catch (const Error&) {
      ++unreadable;
      continue;
    }
    const std::string stem = meta.stem().string();
    item.fields.try_emplace("media_id", stem);
    auto a = audio.find(stem);
    if (a != audio.end()) item.audio_ref = a->second.string();
    items.push_back(std::move(item));
  }

  std::unique_lock lock(mutex_);
  items_ = std::move(items);
  unreadable_ = unreadable;
}

std::size_t LocalCorpusSource::size() const {
  std::shared_lock lock(mutex_);
  return items_.size();
}

std::size_t LocalCorpusSource::unreadable() const {
  std::shared_lock lock(mutex_);
  return unreadable_;
}

std::vector<RawItem> LocalCorpusSource::search(const std::string& query, std::size_t /*hint*/) {
  std::vector<std::string> wanted;
  for (auto& w : words(query))
    if (w != "sound" && w != "sounds") wanted.push_back(std::move(w));

  std::shared_lock lock(mutex_);
  std::vector<RawItem> out;
  for (const auto& item : items_) {
    std::string text;
    for (const char* key : {"title", "description", "keywords", "tags"}) {
      auto it = item.fields.find(key);
      if (it != item.fields.end()) text += it->second + " ";
    }
    const auto have = words(text);
    const std::set<std::string> bag(have.begin(), have.end());
    if (std::all_of(wanted.begin(), wanted.end(), [&](const std::string& w) { return bag.contains(w); }))
      out.push_back(item);
  }
  return out;
}

RawItem LocalCorpusSource::resolve(const std::string& url) {
  std::shared_lock lock(mutex_);
  if (url.starts_with("local:")) {
    const std::string id = url.substr(6);
    for (const auto& item : items_)
      if (item.fields.at("media_id") == id) return item;
    throw CrawlError("no local media with id '" + id + "'");
  }
  for (const auto& item : items_) {
    auto it = item.fields.find("url");
    if (it != item.fields.end() && it->second == url) return item;
  }
  if (url.starts_with("file://")) {
    std::filesystem::path p = url.substr(7);
    for (const auto& item : items_)
      if (!item.audio_ref.empty() && std::filesystem::path(item.audio_ref) == p) return item;
  }
  throw CrawlError("local corpus cannot resolve '" + url + "'");
}

DecodedAudio LocalCorpusSource::fetch_audio(const RawItem& item) {
  if (item.audio_ref.empty()) throw CrawlError("item has no audio file");
  if (std::filesystem::path(item.audio_ref).extension() != ".wav")
    throw InvalidAudioError("only WAV audio can be decoded: " + item.audio_ref);
  return read_wav(item.audio_ref);
}

std::unique_ptr<MediaSource> make_source(const std::string& spec) {
  if (spec.starts_with("local:")) return std::make_unique<LocalCorpusSource>(spec.substr(6));
  if (spec.starts_with("http:")) {
    std::string rest = spec.substr(5);
    if (!rest.starts_with("http://") && !rest.starts_with("https://")) rest = "http://" + rest;
    return std::make_unique<HttpMediaSource>(rest);
  }
  throw ConfigError("unknown source '" + spec + "'; expected local:<dir> or http:<url>");
}

CrawlJob make_crawl_job(const SoundClass& sound_class, std::size_t limit) {
  if (limit == 0) throw ConfigError("crawl limit must be positive");
  return CrawlJob{sound_class, formulate_query(sound_class.label), limit};
}

std::vector<CrawledItem> crawl_once(const CrawlJob& job, MediaSource& source, CrawlCounters* counters) {
  if (job.requested_limit == 0) throw ContractViolation("crawl job limit must be positive");
  if (job.query != formulate_query(job.sound_class.label))
    throw ContractViolation("crawl job query does not match its label");

  std::vector<RawItem> candidates;
  try {
    candidates = source.search(job.query, job.requested_limit);
  } catch (const CrawlError&) {
    throw;
  } catch (const std::exception& e) {
    throw CrawlError(source.name() + ": " + e.what());
  }

  std::vector<CrawledItem> out;
  for (auto& raw : candidates) {
    if (out.size() >= job.requested_limit) break;
    try {
      MediaRecord rec = extract_metadata(raw);
      if (!admit_media(rec.duration_s)) {
        if (counters) ++counters->rejected_duration;
        continue;
      }
      out.push_back({std::move(rec), job.sound_class.label, std::move(raw)});
      if (counters) ++counters->emitted;
    } catch (const Error&) {
      if (counters) ++counters->skipped;
    }
  }
  return out;
}

}  // namespace nels
