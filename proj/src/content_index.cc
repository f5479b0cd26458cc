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

#include "nels/content_index.h"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numeric>

#include "nels/errors.h"
#include "nels/json_codec.h"

namespace nels {

using json = nlohmann::json;

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot read index log " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

json to_json(const MediaRecord& r) {
  return json{
      {"media_id", r.media_id},
      {"url", r.url},
      {"title", r.title},
      {"description", optional_json(r.description)},
      {"duration_s", r.duration_s},
      {"upload_date", optional_json(r.upload_date)},
      {"uploader", optional_json(r.uploader)},
      {"view_count", optional_json(r.view_count)},
      {"like_count", optional_json(r.like_count)},
      {"category", optional_json(r.category)},
      {"keywords", r.keywords},
      {"thumbnail_url", optional_json(r.thumbnail_url)},
  };
}

MediaRecord media_record_from_json(const json& j) {
  MediaRecord r;
  r.media_id = j.at("media_id").get<std::string>();
  r.url = j.at("url").get<std::string>();
  r.title = j.at("title").get<std::string>();
  r.description = optional_from<std::string>(j, "description");
  r.duration_s = j.at("duration_s").get<double>();
  r.upload_date = optional_from<std::string>(j, "upload_date");
  r.uploader = optional_from<std::string>(j, "uploader");
  r.view_count = optional_from<std::uint64_t>(j, "view_count");
  r.like_count = optional_from<std::uint64_t>(j, "like_count");
  r.category = optional_from<std::string>(j, "category");
  if (j.contains("keywords")) r.keywords = j.at("keywords").get<std::vector<std::string>>();
  r.thumbnail_url = optional_from<std::string>(j, "thumbnail_url");
  return r;
}

json to_json(const IndexEntry& e) {
  json top = json::array();
  for (const auto& s : e.top_scores) top.push_back({{"class", s.label}, {"score", s.score}});
  return json{
      {"segment_id", e.segment_id},
      {"media_id", e.media_id},
      {"offset_s", e.offset_s},
      {"predicted_class", e.predicted_class},
      {"confidence", e.confidence},
      {"top_scores", std::move(top)},
      {"crawl_label", e.crawl_label},
      {"metadata", to_json(e.metadata)},
      {"correct_votes", e.correct_votes},
      {"incorrect_votes", e.incorrect_votes},
      {"indexed_at", e.indexed_at},
  };
}

IndexEntry index_entry_from_json(const json& j) {
  IndexEntry e;
  e.segment_id = j.at("segment_id").get<std::string>();
  e.media_id = j.at("media_id").get<std::string>();
  e.offset_s = j.at("offset_s").get<double>();
  e.predicted_class = j.at("predicted_class").get<std::string>();
  e.confidence = j.at("confidence").get<double>();
  for (const auto& s : j.at("top_scores"))
    e.top_scores.push_back({s.at("class").get<std::string>(), s.at("score").get<double>()});
  e.crawl_label = j.at("crawl_label").get<std::string>();
  e.metadata = media_record_from_json(j.at("metadata"));
  e.correct_votes = j.at("correct_votes").get<std::uint64_t>();
  e.incorrect_votes = j.at("incorrect_votes").get<std::uint64_t>();
  e.indexed_at = j.at("indexed_at").get<std::string>();
  return e;
}

json to_json(const FeedbackEvent& e) {
  return json{{"segment_id", e.segment_id},
              {"class_label", e.class_label},
              {"verdict", verdict_name(e.verdict)},
              {"timestamp", e.timestamp}};
}

FeedbackEvent feedback_from_json(const json& j) {
  FeedbackEvent e;
  e.segment_id = j.at("segment_id").get<std::string>();
  e.class_label = j.at("class_label").get<std::string>();
  auto v = parse_verdict(j.at("verdict").get<std::string>());
  if (!v) throw InvalidInputError("unknown verdict");
  e.verdict = *v;
  e.timestamp = j.at("timestamp").get<std::string>();
  return e;
}

std::string_view verdict_name(Verdict v) { return v == Verdict::kCorrect ? "Correct" : "Incorrect"; }

std::optional<Verdict> parse_verdict(std::string_view s) {
  std::string l(s);
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  if (l == "correct") return Verdict::kCorrect;
  if (l == "incorrect") return Verdict::kIncorrect;
  return std::nullopt;
}

double hours_for_segments(std::size_t segments) { return double(segments) * kSegmentSeconds / 3600.0; }

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  const std::size_t n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + n, sizeof buf - n, ".%03dZ", static_cast<int>(ms));
  return buf;
}

IndexEntry make_index_entry(const AudioSegment& segment, const std::vector<double>& scores,
                            const Vocabulary& classes, const std::string& crawl_label,
                            const MediaRecord& metadata) {
  if (scores.size() != classes.size() || scores.empty())
    throw ContractViolation("score vector does not match the class list");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  IndexEntry e;
  e.segment_id = segment.segment_id;
  e.media_id = segment.media_id;
  e.offset_s = segment.offset_s;
  for (std::size_t i = 0; i < std::min(kMaxTopScores, order.size()); ++i)
    e.top_scores.push_back({classes.at(int(order[i])).label, scores[order[i]]});
  e.predicted_class = e.top_scores.front().label;
  e.confidence = e.top_scores.front().score;
  e.crawl_label = crawl_label;
  e.metadata = metadata;
  e.indexed_at = now_iso8601();
  return e;
}

ContentIndex::ContentIndex() = default;

ContentIndex::ContentIndex(Options options) : options_(std::move(options)) {}

ContentIndex::~ContentIndex() {
  if (log_) std::fclose(log_);
}

std::unique_ptr<ContentIndex> ContentIndex::open(const std::filesystem::path& path, Options options) {
  auto index = std::make_unique<ContentIndex>(std::move(options));
  if (std::filesystem::exists(path)) {
    std::size_t good = 0;
    const LoadReport report = index->replay(path, true, &good);
    if (report.error_line) throw ParseError(*report.error_line, path.string() + ": " + report.error_message);
    if (report.skipped) std::filesystem::resize_file(path, good);
  }
  index->path_ = path;
  index->log_ = std::fopen(path.c_str(), "ab");
  if (!index->log_) throw StorageError("cannot open index log " + path.string() + " for appending");
  return index;
}

ContentIndex::Loaded ContentIndex::load(const std::filesystem::path& path, Options options) {
  Loaded out{std::make_unique<ContentIndex>(std::move(options)), {}};
  out.report = out.index->replay(path, true, nullptr);
  return out;
}

LoadReport ContentIndex::replay(const std::filesystem::path& path, bool stop_on_error, std::size_t* good_bytes) {
  const std::string data = read_file(path);
  LoadReport report;
  std::size_t pos = 0, line = 0, good = 0;
  while (pos < data.size()) {
    ++line;
    const auto nl = data.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string_view text(data.data() + pos, (terminated ? nl : data.size()) - pos);
    const std::size_t next = terminated ? nl + 1 : data.size();
    if (text.find_first_not_of(" \t\r") == std::string_view::npos) {
      pos = next;
      good = next;
      continue;
    }
    try {
      const json j = json::parse(text);
      const std::string type = j.at("type").get<std::string>();
      if (type == "entry") {
        IndexEntry e = index_entry_from_json(j);
        validate(e);
        apply_entry(std::move(e));
      } else if (type == "feedback") {
        apply_feedback(feedback_from_json(j));
      } else {
        throw InvalidInputError("unknown record type '" + type + "'");
      }
      ++report.records_applied;
      good = next;
    } catch (const std::exception& ex) {
      if (!terminated) {
        // A record cut off by a crash; everything before it is intact.
        ++report.skipped;
        break;
      }
      report.error_line = line;
      report.error_message = ex.what();
      if (stop_on_error) break;
    }
    pos = next;
  }
  if (good_bytes) *good_bytes = good;
  return report;
}

void ContentIndex::validate(const IndexEntry& e) const {
  if (e.segment_id.empty() || e.media_id.empty()) throw InvalidInputError("entry needs segment_id and media_id");
  if (e.top_scores.empty() || e.top_scores.size() > kMaxTopScores)
    throw InvalidInputError("entry needs between one and five top scores");
  for (std::size_t i = 1; i < e.top_scores.size(); ++i)
    if (e.top_scores[i].score > e.top_scores[i - 1].score)
      throw InvalidInputError("top scores must be sorted descending");
  if (e.top_scores.front().label != e.predicted_class || e.top_scores.front().score != e.confidence)
    throw InvalidInputError("confidence must equal the first top score");
  if (!(e.confidence >= 0.0 && e.confidence <= 1.0)) throw InvalidInputError("confidence outside [0, 1]");
  if (e.crawl_label.empty()) throw InvalidInputError("entry needs a crawl label");
  if (options_.vocabulary) {
    if (!options_.vocabulary->contains(e.predicted_class))
      throw InvalidInputError("predicted class not in vocabulary: " + e.predicted_class);
    if (!options_.vocabulary->contains(e.crawl_label))
      throw InvalidInputError("crawl label not in vocabulary: " + e.crawl_label);
  }
}

void ContentIndex::apply_entry(IndexEntry entry) {
  auto it = entries_.find(entry.segment_id);
  if (it != entries_.end()) {
    IndexEntry& old = it->second;
    by_class_[old.predicted_class].erase(RankKey{old.confidence, old.segment_id});
    entry.correct_votes = old.correct_votes;
    entry.incorrect_votes = old.incorrect_votes;
    old = std::move(entry);
    by_class_[old.predicted_class].insert(RankKey{old.confidence, old.segment_id});
    return;
  }
  by_class_[entry.predicted_class].insert(RankKey{entry.confidence, entry.segment_id});
  std::string key = entry.segment_id;
  entries_.emplace(std::move(key), std::move(entry));
}

Tallies ContentIndex::apply_feedback(const FeedbackEvent& event) {
  auto it = entries_.find(event.segment_id);
  if (it == entries_.end()) throw NotFoundError("unknown segment '" + event.segment_id + "'");
  IndexEntry& e = it->second;
  if (event.verdict == Verdict::kCorrect) {
    ++e.correct_votes;
  } else {
    ++e.incorrect_votes;
  }
  return {e.correct_votes, e.incorrect_votes};
}

void ContentIndex::append_line(const std::string& line) {
  if (!log_) return;
  const std::string rec = line + "\n";
  if (std::fwrite(rec.data(), 1, rec.size(), log_) != rec.size() || std::fflush(log_) != 0)
    throw StorageError("index log write failed");
  if (options_.fsync_each_write && ::fsync(::fileno(log_)) != 0) throw StorageError("index log fsync failed");
}

void ContentIndex::insert(IndexEntry entry) {
  validate(entry);
  if (entry.indexed_at.empty()) entry.indexed_at = now_iso8601();
  std::unique_lock lock(mutex_);
  if (auto it = entries_.find(entry.segment_id); it != entries_.end()) {
    entry.correct_votes = it->second.correct_votes;
    entry.incorrect_votes = it->second.incorrect_votes;
  }
  json j = to_json(entry);
  j["type"] = "entry";
  append_line(j.dump());
  apply_entry(std::move(entry));
}

std::optional<IndexEntry> ContentIndex::get(std::string_view segment_id) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(segment_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<IndexEntry> ContentIndex::query_by_class_topk(std::string_view label, std::size_t k) const {
  if (k == 0) throw InvalidInputError("k must be at least 1");
  std::shared_lock lock(mutex_);
  std::vector<IndexEntry> out;
  auto it = by_class_.find(label);
  if (it == by_class_.end()) return out;
  for (const auto& key : it->second) {
    if (out.size() == k) break;
    out.push_back(entries_.find(key.segment_id)->second);
  }
  return out;
}

Tallies ContentIndex::record_feedback(const FeedbackEvent& event) {
  FeedbackEvent ev = event;
  if (ev.timestamp.empty()) ev.timestamp = now_iso8601();
  std::unique_lock lock(mutex_);
  if (!entries_.contains(ev.segment_id)) throw NotFoundError("unknown segment '" + ev.segment_id + "'");
  json j = to_json(ev);
  j["type"] = "feedback";
  append_line(j.dump());
  return apply_feedback(ev);
}

IndexStats ContentIndex::stats() const {
  std::shared_lock lock(mutex_);
  IndexStats s;
  s.segment_count = entries_.size();
  s.hours_indexed = hours_for_segments(s.segment_count);
  for (const auto& [label, keys] : by_class_)
    if (!keys.empty()) s.per_class_counts[label] = keys.size();
  for (const auto& [id, e] : entries_) s.feedback_count += e.correct_votes + e.incorrect_votes;
  return s;
}

std::size_t ContentIndex::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<IndexEntry> ContentIndex::entries() const {
  std::shared_lock lock(mutex_);
  std::vector<IndexEntry> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(e);
  return out;
}

void ContentIndex::write_compacted(const std::filesystem::path& path) const {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw StorageError("cannot write " + tmp.string());
  bool ok = true;
  for (const auto& [id, e] : entries_) {
    json j = to_json(e);
    j["type"] = "entry";
    const std::string line = j.dump() + "\n";
    ok = ok && std::fwrite(line.data(), 1, line.size(), f) == line.size();
  }
  ok = ok && std::fflush(f) == 0 && ::fsync(::fileno(f)) == 0;
  ok = (std::fclose(f) == 0) && ok;
  if (!ok) {
    std::filesystem::remove(tmp);
    throw StorageError("failed writing compacted index " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void ContentIndex::persist(const std::filesystem::path& path) const {
  if (path_ && std::filesystem::absolute(path) == std::filesystem::absolute(*path_))
    throw InvalidInputError("persist target is the live log; use compact()");
  std::shared_lock lock(mutex_);
  write_compacted(path);
}

void ContentIndex::compact() {
  std::unique_lock lock(mutex_);
  if (!path_) return;
  if (log_) {
    std::fclose(log_);
    log_ = nullptr;
  }
  write_compacted(*path_);
  log_ = std::fopen(path_->c_str(), "ab");
  if (!log_) throw StorageError("cannot reopen index log " + path_->string());
}

}  // namespace nels
