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

#include <httplib.h>

#include <json.hpp>

#include "nels/crawler.h"
#include "nels/errors.h"

namespace nels {

namespace {

using json = nlohmann::json;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/', may be "/"
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw CrawlError("not an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

RawItem item_from_json(const json& j, const std::string& base) {
  if (!j.is_object()) throw CrawlError("source returned a non-object item");
  RawItem item;
  for (const auto& [k, v] : j.items()) {
    if (v.is_null()) continue;
    if (v.is_string()) {
      item.fields[k] = v.get<std::string>();
    } else if (v.is_array()) {
      std::string joined;
      for (const auto& e : v) {
        if (!joined.empty()) joined += ",";
        joined += e.is_string() ? e.get<std::string>() : e.dump();
      }
      item.fields[k] = joined;
    } else {
      item.fields[k] = v.dump();
    }
  }
  if (auto it = item.fields.find("audio_url"); it != item.fields.end()) {
    item.audio_ref = it->second;
  } else {
    auto id = item.fields.find("media_id");
    if (id == item.fields.end()) id = item.fields.find("id");
    if (id != item.fields.end()) item.audio_ref = base + httplib::append_query_params("/audio", {{"id", id->second}});
  }
  return item;
}

}  // namespace

HttpMediaSource::HttpMediaSource(std::string base_url, int timeout_s)
    : base_url_(std::move(base_url)), timeout_s_(timeout_s) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  split_url(base_url_);
}

std::string HttpMediaSource::get(const std::string& url) {
  const auto parts = split_url(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(timeout_s_);
  client.set_read_timeout(timeout_s_);
  auto res = client.Get(parts.path);
  if (!res) throw CrawlError("GET " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw CrawlError("GET " + url + " returned HTTP " + std::to_string(res->status));
  return res->body;
}

std::vector<RawItem> HttpMediaSource::search(const std::string& query, std::size_t hint) {
  const std::string body = get(base_url_ + httplib::append_query_params(
                                              "/search", {{"q", query}, {"limit", std::to_string(hint)}}));
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw CrawlError(std::string("source returned invalid JSON: ") + e.what());
  }
  if (!j.is_array()) throw CrawlError("source search must return a JSON array");
  std::vector<RawItem> out;
  for (const auto& e : j) {
    try {
      out.push_back(item_from_json(e, base_url_));
    } catch (const CrawlError&) {
      // Malformed entries are dropped like any other per-item failure.
    }
  }
  return out;
}

RawItem HttpMediaSource::resolve(const std::string& url) {
  if (!url.starts_with("http://") && !url.starts_with("https://"))
    throw CrawlError("http source cannot resolve '" + url + "'");
  const std::string body = get(base_url_ + httplib::append_query_params("/resolve", {{"url", url}}));
  try {
    return item_from_json(json::parse(body), base_url_);
  } catch (const json::exception& e) {
    throw CrawlError(std::string("source returned invalid JSON: ") + e.what());
  }
}

DecodedAudio HttpMediaSource::fetch_audio(const RawItem& item) {
  if (item.audio_ref.empty()) throw CrawlError("item has no audio reference");
  const std::string body = get(item.audio_ref);
  return decode_wav(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

}  // namespace nels
