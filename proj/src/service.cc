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

#include "nels/service.h"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <istream>

#include "nels/errors.h"
#include "nels/json_codec.h"
#include "nels/pipeline.h"

namespace nels {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

Response error(int status, std::string kind, std::string message) {
  return {status, json{{"error", std::move(kind)}, {"message", std::move(message)}}};
}

const char* kConfigKeys[] = {"listen", "host", "port", "index", "model", "embeddings",
                             "source", "classify_workers", "fsync"};

}  // namespace

std::optional<std::string> ServiceConfig::process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

void ServiceConfig::set(const std::string& key, const std::string& value) {
  auto port_of = [&](std::string_view s) {
    auto p = parse_number<int>(s);
    if (!p || *p < 0 || *p > 65535) throw ConfigError("bad port '" + std::string(s) + "'");
    return *p;
  };
  if (key == "listen") {
    const auto colon = value.rfind(':');
    if (colon == std::string::npos) throw ConfigError("listen must be host:port, got '" + value + "'");
    host = value.substr(0, colon);
    port = port_of(std::string_view(value).substr(colon + 1));
  } else if (key == "host") {
    host = value;
  } else if (key == "port") {
    port = port_of(value);
  } else if (key == "index") {
    index_path = value;
  } else if (key == "model") {
    model_path = value;
  } else if (key == "embeddings") {
    embeddings_path = value;
  } else if (key == "source") {
    source = value;
  } else if (key == "classify_workers") {
    auto n = parse_number<std::size_t>(value);
    if (!n || *n == 0) throw ConfigError("classify_workers must be a positive integer");
    classify_workers = *n;
  } else if (key == "fsync") {
    if (value == "true" || value == "1") fsync = true;
    else if (value == "false" || value == "0") fsync = false;
    else throw ConfigError("fsync must be true or false");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

ServiceConfig ServiceConfig::parse(std::istream& in, const EnvLookup& env) {
  ServiceConfig cfg;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  for (const char* key : kConfigKeys) {
    std::string name = "NELS_";
    for (const char* c = key; *c; ++c) name.push_back(char(std::toupper(static_cast<unsigned char>(*c))));
    if (auto v = env(name)) cfg.set(key, *v);
  }
  return cfg;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  return parse(in, env);
}

json search_result_json(const IndexEntry& e) {
  const auto& m = e.metadata;
  return json{{"segment_id", e.segment_id},
              {"media_url", m.url},
              {"offset_s", e.offset_s},
              {"predicted_class", e.predicted_class},
              {"confidence", e.confidence},
              {"title", m.title},
              {"thumbnail_url", m.thumbnail_url ? json(*m.thumbnail_url) : json(nullptr)},
              {"votes", {{"correct", e.correct_votes}, {"incorrect", e.incorrect_votes}}}};
}

SearchService::SearchService(std::shared_ptr<ContentIndex> index, std::shared_ptr<const QueryMapper> mapper,
                             std::shared_ptr<const Model> model, std::shared_ptr<MediaSource> source,
                             std::size_t classify_slots)
    : index_(std::move(index)),
      mapper_(std::move(mapper)),
      model_(std::move(model)),
      source_(std::move(source)),
      classify_slots_(std::ptrdiff_t(std::max<std::size_t>(1, classify_slots))) {
  if (!index_ || !mapper_) throw ConfigError("search service needs an index and a query mapper");
}

Response SearchService::search(const std::optional<std::string>& q, const std::optional<std::string>& limit) const {
  if (!q || trim(*q).empty()) return error(400, "bad-request", "missing query parameter q");
  std::size_t n = kDefaultSearchLimit;
  if (limit) {
    auto v = parse_number<std::size_t>(trim(*limit));
    if (!v || *v == 0 || *v > kMaxSearchLimit)
      return error(400, "bad-request", "limit must be an integer in 1.." + std::to_string(kMaxSearchLimit));
    n = *v;
  }
  const auto mapping = mapper_->map(*q);
  json body{{"query", *q},
            {"matched_class", mapping.matched_class ? json(mapping.matched_class->label) : json(nullptr)},
            {"similarity", mapping.similarity ? json(*mapping.similarity) : json(nullptr)},
            {"results", json::array()}};
  if (!mapping.matched_class) {
    body["status"] = kNoClassStatus;
    return {200, std::move(body)};
  }
  body["status"] = "ok";
  for (const auto& e : index_->query_by_class_topk(mapping.matched_class->label, n))
    body["results"].push_back(search_result_json(e));
  return {200, std::move(body)};
}

Response SearchService::classify_link(const std::optional<std::string>& url) {
  if (!url || trim(*url).empty()) return error(400, "bad-request", "missing query parameter url");
  if (!source_) return error(502, "upstream-error", "no media source configured");
  if (!model_) return error(503, "unavailable", "no model loaded");

  RawItem item;
  MediaRecord record;
  try {
    item = source_->resolve(trim(*url));
    record = extract_metadata(item);
  } catch (const CrawlError& e) {
    return error(502, "upstream-error", e.what());
  } catch (const MetadataIncompleteError& e) {
    return error(502, "upstream-error", e.what());
  } catch (const InvalidDurationError& e) {
    return error(502, "upstream-error", e.what());
  }
  auto rejected = [&](double d) {
    return Response{422, json{{"error", "rejected-duration"},
                              {"message", "media must be between 2 and 600 seconds long"},
                              {"duration_s", d}}};
  };
  if (!admit_media(record.duration_s)) return rejected(record.duration_s);

  DecodedAudio audio;
  try {
    audio = source_->fetch_audio(item);
  } catch (const CrawlError& e) {
    return error(502, "upstream-error", e.what());
  } catch (const InvalidAudioError& e) {
    return error(502, "upstream-error", e.what());
  }
  const std::size_t frames = audio.channels.empty() ? 0 : audio.channels.front().size();
  const double actual_s = audio.sample_rate > 0 ? double(frames) / audio.sample_rate : 0.0;
  if (!admit_media(actual_s)) return rejected(actual_s);

  classify_slots_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{classify_slots_};
  const auto analysis = analyze_audio(*model_, audio, record.media_id);

  json segments = json::array();
  for (std::size_t i = 0; i < analysis.segments.size(); ++i) {
    const auto& p = analysis.dominant.per_segment[i];
    segments.push_back({{"index", analysis.segments[i].index},
                        {"offset_s", analysis.segments[i].offset_s},
                        {"label", p.argmax_class.label},
                        {"confidence", p.confidence}});
  }
  json sums = json::object();
  for (const auto& c : model_->classes.classes()) sums[c.label] = analysis.dominant.score_sums[std::size_t(c.class_id)];
  return {200, json{{"status", "ok"},
                    {"url", *url},
                    {"media", to_json(record)},
                    {"dominant_class", analysis.dominant.dominant.label},
                    {"score_sums", std::move(sums)},
                    {"segments", std::move(segments)}}};
}

Response SearchService::feedback(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    return error(400, "bad-request", "body is not valid JSON");
  }
  if (!j.is_object()) return error(400, "bad-request", "body must be a JSON object");
  for (const char* key : {"segment_id", "class", "verdict"})
    if (!j.contains(key) || !j[key].is_string())
      return error(400, "bad-request", std::string("missing string field '") + key + "'");
  const auto verdict = parse_verdict(j["verdict"].get<std::string>());
  if (!verdict) return error(400, "bad-request", "verdict must be 'correct' or 'incorrect'");

  FeedbackEvent event{j["segment_id"].get<std::string>(), j["class"].get<std::string>(), *verdict, {}};
  try {
    const Tallies t = index_->record_feedback(event);
    return {200, json{{"segment_id", event.segment_id}, {"correct", t.correct}, {"incorrect", t.incorrect}}};
  } catch (const NotFoundError& e) {
    return error(404, "not-found", e.what());
  } catch (const InvalidInputError& e) {
    return error(400, "bad-request", e.what());
  }
}

Response SearchService::stats() const {
  const IndexStats s = index_->stats();
  return {200, json{{"segment_count", s.segment_count},
                    {"hours_indexed", s.hours_indexed},
                    {"per_class_counts", s.per_class_counts},
                    {"feedback_count", s.feedback_count}}};
}

std::unique_ptr<SearchService> build_service(const ServiceConfig& config) {
  auto model = std::make_shared<const Model>(load_model(config.model_path));
  auto vocab = std::make_shared<const EmbeddingVocabulary>(load_embeddings(config.embeddings_path));
  auto mapper = std::make_shared<const QueryMapper>(vocab, model->classes);
  ContentIndex::Options opts;
  opts.fsync_each_write = config.fsync;
  opts.vocabulary = std::make_shared<const Vocabulary>(model->classes);
  std::shared_ptr<ContentIndex> index = ContentIndex::open(config.index_path, opts);
  std::shared_ptr<MediaSource> source;
  if (!config.source.empty()) source = make_source(config.source);
  return std::make_unique<SearchService>(std::move(index), std::move(mapper), std::move(model), std::move(source),
                                         config.classify_workers);
}

struct HttpServer::Impl {
  httplib::Server server;
};

namespace {

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json; charset=utf-8");
}

}  // namespace

HttpServer::HttpServer(SearchService& service, std::string host, int port)
    : impl_(std::make_unique<Impl>()), host_(std::move(host)), port_(port) {
  auto& s = impl_->server;
  s.Get("/search", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.search(param(req, "q"), param(req, "limit")));
  });
  s.Get("/classify", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.classify_link(param(req, "url")));
  });
  s.Post("/feedback", [&service](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.feedback(req.body));
  });
  s.Get("/stats", [&service](const httplib::Request&, httplib::Response& res) { reply(res, service.stats()); });
  // Handlers never leak partial bodies: any escaped exception becomes a 500.
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, error(500, "internal-error", what));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start() {
  auto& s = impl_->server;
  if (port_ == 0) {
    port_ = s.bind_to_any_port(host_);
    if (port_ < 0) throw StorageError("cannot bind " + host_);
  } else if (!s.bind_to_port(host_, port_)) {
    throw StorageError("cannot bind " + host_ + ":" + std::to_string(port_));
  }
  thread_ = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return port_;
}

void HttpServer::run() {
  auto& s = impl_->server;
  if (port_ == 0) {
    port_ = s.bind_to_any_port(host_);
    if (port_ < 0) throw StorageError("cannot bind " + host_);
  } else if (!s.bind_to_port(host_, port_)) {
    throw StorageError("cannot bind " + host_ + ":" + std::to_string(port_));
  }
  std::cerr << "nels: serving on " << host_ << ':' << port_ << '\n';
  s.listen_after_bind();
}

void HttpServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace nels
