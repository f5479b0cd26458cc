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
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>

#include <json.hpp>

#include "nels/classifier.h"
#include "nels/content_index.h"
#include "nels/crawler.h"
#include "nels/query_mapper.h"

namespace nels {

inline constexpr std::size_t kDefaultSearchLimit = 20;
inline constexpr std::size_t kMaxSearchLimit = 1000;
inline constexpr char kNoClassStatus[] = "no class above threshold";

// key=value settings; '#' starts a comment. Every key can be overridden by
// an environment variable NELS_<KEY> (upper case).
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path index_path = "nels.index";
  std::filesystem::path model_path = "model.bin";
  std::filesystem::path embeddings_path = "embeddings.txt";
  std::string source;  // "local:<dir>" or "http:<url>"; empty disables /classify
  std::size_t classify_workers = 2;
  bool fsync = false;

  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  // Throws ConfigError for unknown keys or bad values.
  static ServiceConfig parse(std::istream& in, const EnvLookup& env = process_env);
  static ServiceConfig load(const std::filesystem::path& path, const EnvLookup& env = process_env);
  static std::optional<std::string> process_env(const std::string& name);

  void set(const std::string& key, const std::string& value);
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

// Transport-independent request handlers. All methods are safe to call
// concurrently; feedback goes through the index's single writer path and
// classification is capped at `classify_slots` concurrent jobs.
class SearchService {
 public:
  SearchService(std::shared_ptr<ContentIndex> index, std::shared_ptr<const QueryMapper> mapper,
                std::shared_ptr<const Model> model, std::shared_ptr<MediaSource> source,
                std::size_t classify_slots = 2);

  // GET /search?q=&limit=
  Response search(const std::optional<std::string>& q, const std::optional<std::string>& limit) const;
  // GET /classify?url=
  Response classify_link(const std::optional<std::string>& url);
  // POST /feedback {"segment_id", "class", "verdict"}
  Response feedback(const std::string& body);
  // GET /stats
  Response stats() const;

  ContentIndex& index() { return *index_; }

 private:
  std::shared_ptr<ContentIndex> index_;
  std::shared_ptr<const QueryMapper> mapper_;
  std::shared_ptr<const Model> model_;
  std::shared_ptr<MediaSource> source_;
  std::counting_semaphore<> classify_slots_;
};

nlohmann::json search_result_json(const IndexEntry& e);

// Opens the index, model, embeddings and source named by the config.
std::unique_ptr<SearchService> build_service(const ServiceConfig& config);

// HTTP binding of a SearchService.
class HttpServer {
 public:
  HttpServer(SearchService& service, std::string host, int port);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  // Throws StorageError when the address cannot be bound.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_;
  std::thread thread_;
};

}  // namespace nels
