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

// Command-line front end: crawling, feature extraction, training, index
// maintenance, query mapping, evaluation and the HTTP service.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nels/audio.h"
#include "nels/classifier.h"
#include "nels/content_index.h"
#include "nels/crawler.h"
#include "nels/dataset.h"
#include "nels/errors.h"
#include "nels/evaluation.h"
#include "nels/features.h"
#include "nels/json_codec.h"
#include "nels/pipeline.h"
#include "nels/query_mapper.h"
#include "nels/self_training.h"
#include "nels/service.h"
#include "nels/synthetic.h"
#include "nels/vocabulary.h"

namespace fs = std::filesystem;

namespace {

using namespace nels;

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// "all" selects every class of `base`; otherwise a file of labels, one per line.
Vocabulary select_classes(const std::string& spec, const Vocabulary& base) {
  if (spec == "all") return base;
  return base.subset(read_lines(spec));
}

// Classes the crawl works over: the model's when one is given, else the
// shipped vocabulary (plus AudioSet when its label file is supplied).
Vocabulary crawl_vocabulary(const std::optional<Model>& model, const std::string& audioset_csv) {
  if (model) return model->classes;
  if (!audioset_csv.empty()) return builtin_vocabulary(fs::path(audioset_csv));
  return builtin_vocabulary();
}

struct Args {
  // crawl
  std::string labels = "all", source, audioset_csv;
  std::size_t limit = 10, workers = 2;
  // shared
  std::string model_path, index_path = "nels.index", out, manifest, embeddings, config;
  std::uint64_t seed = 7;
  // features
  std::string audio_file;
  // train / selftrain
  std::string holdout_fold, eval_fold, pool_dir;
  int epochs = 500, rounds = 5, patience = 3;
  double tau = 0.85;
  // index
  std::string klass;
  std::size_t k = kDefaultEvalK;
  std::string classes = "all";
  // map / discover
  std::string query, in;
  // synth
  std::size_t clips = 50;
  bool held_out = false;
};

int cmd_crawl(const Args& a) {
  std::optional<Model> model;
  if (!a.model_path.empty()) model = load_model(a.model_path);
  const Vocabulary classes = select_classes(a.labels, crawl_vocabulary(model, a.audioset_csv));
  auto source = make_source(a.source);
  const auto jobs = round_robin_jobs(classes, a.limit);

  std::unique_ptr<ContentIndex> index;
  std::unique_ptr<Indexer> indexer;
  std::size_t segments = 0;
  if (model) {
    ContentIndex::Options opts;
    opts.vocabulary = std::make_shared<const Vocabulary>(model->classes);
    index = ContentIndex::open(a.index_path, opts);
    indexer = std::make_unique<Indexer>(*model, *source, *index);
  }
  CrawlOptions opts;
  opts.workers = a.workers;
  const auto summary = run_crawl(jobs, *source, [&](CrawledItem&& item) {
    if (indexer) {
      segments += indexer->index_item(item);
    } else {
      auto j = to_json(item.record);
      j["crawl_label"] = item.crawl_label;
      std::cout << j.dump() << '\n';
    }
  }, opts);
  std::cerr << "jobs " << summary.jobs << ", failed " << summary.failed_jobs << ", emitted " << summary.emitted
            << ", rejected_duration " << summary.rejected_duration << ", skipped " << summary.skipped;
  if (indexer) std::cerr << ", indexed_segments " << segments << ", index_failures " << summary.sink_failures;
  std::cerr << '\n';
  return summary.failed_jobs == summary.jobs && summary.jobs > 0 ? 1 : 0;
}

int cmd_features(const Args& a) {
  const auto segments = segment_waveform(canonicalize_audio(read_wav(a.audio_file)), fs::path(a.audio_file).stem());
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!a.out.empty() && a.out != "-") {
    file.open(a.out);
    if (!file) throw StorageError("cannot write " + a.out);
    out = &file;
  }
  for (const auto& seg : segments) write_feature_matrix(*out, log_mel_features(seg));
  std::cerr << segments.size() << " segment(s)\n";
  return 0;
}

// Splits manifest rows on a fold name; an empty fold keeps everything in `rest`.
void split_fold(const std::vector<ManifestRow>& rows, const std::string& fold, std::vector<ManifestRow>& rest,
                std::vector<ManifestRow>& picked) {
  for (const auto& r : rows) (!fold.empty() && r.fold == fold ? picked : rest).push_back(r);
}

int cmd_train(const Args& a) {
  const auto rows = read_manifest(a.manifest);
  const Vocabulary classes = manifest_classes(rows);
  std::vector<ManifestRow> train_rows, test_rows;
  split_fold(rows, a.holdout_fold, train_rows, test_rows);
  TrainOptions opts;
  opts.seed = a.seed;
  opts.epochs = a.epochs;
  const Model model = train(load_examples(train_rows, classes), classes, opts);
  save_model(model, a.out);
  std::cerr << "trained " << classes.size() << " classes, final loss " << model.meta.loss_history.back() << '\n';
  if (!test_rows.empty()) {
    const auto test = load_examples(test_rows, classes);
    std::size_t hit = 0;
    for (const auto& ex : test) hit += predict_pooled(model, ex.features).argmax_class.class_id == ex.class_id;
    std::cout << "holdout_accuracy " << std::setprecision(4) << double(hit) / double(test.size()) << " ("
              << hit << "/" << test.size() << ")\n";
  }
  return 0;
}

int cmd_selftrain(const Args& a) {
  const Model initial = load_model(a.model_path);
  const auto rows = read_manifest(a.manifest);
  std::vector<ManifestRow> base_rows, eval_rows;
  split_fold(rows, a.eval_fold, base_rows, eval_rows);
  if (eval_rows.empty()) throw ConfigError("--eval-fold selects no manifest rows");
  const auto base = load_examples(base_rows, initial.classes);
  const auto eval = load_examples(eval_rows, initial.classes);

  std::vector<PooledFeatures> pool;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.pool_dir))
    if (e.path().extension() == ".wav") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto segs = pooled_segments_of(f);
    pool.insert(pool.end(), segs.begin(), segs.end());
  }

  SelfTrainConfig cfg;
  cfg.confidence_threshold = a.tau;
  cfg.max_rounds = a.rounds;
  cfg.plateau_patience = a.patience;
  const auto run = run_self_training(initial, cfg, base, pool, eval);
  for (const auto& r : run.rounds) {
    std::cout << "round " << r.round << " pseudo_labeled " << r.pseudo_labeled << " precision "
              << std::setprecision(4) << r.before.overall_precision << " -> " << r.after.overall_precision
              << (r.accepted ? " accepted" : " rejected") << '\n';
  }
  save_model(run.model, a.out.empty() ? a.model_path : a.out);
  return 0;
}

std::unique_ptr<ContentIndex> open_index(const Args& a) {
  if (!fs::exists(a.index_path)) throw NotFoundError("no index at " + a.index_path);
  return ContentIndex::open(a.index_path);
}

int cmd_index_stats(const Args& a) {
  const auto s = open_index(a)->stats();
  nlohmann::json j{{"segment_count", s.segment_count},
                   {"hours_indexed", s.hours_indexed},
                   {"per_class_counts", s.per_class_counts},
                   {"feedback_count", s.feedback_count}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_index_topk(const Args& a) {
  for (const auto& e : open_index(a)->query_by_class_topk(a.klass, a.k))
    std::cout << e.segment_id << '\t' << std::setprecision(6) << e.confidence << '\t' << e.metadata.title << '\n';
  return 0;
}

int cmd_index_compact(const Args& a) {
  auto index = open_index(a);
  index->compact();
  std::cerr << "compacted " << index->size() << " entries\n";
  return 0;
}

int cmd_map(const Args& a) {
  auto vocab = std::make_shared<const EmbeddingVocabulary>(load_embeddings(a.embeddings));
  Vocabulary classes = a.model_path.empty() ? builtin_vocabulary() : load_model(a.model_path).classes;
  const QueryMapper mapper(vocab, std::move(classes));
  const auto m = mapper.map(a.query);
  if (m.matched_class) {
    std::cout << m.matched_class->label << '\t' << std::setprecision(6) << *m.similarity << '\n';
    return 0;
  }
  std::cout << kNoClassStatus;
  if (m.similarity) std::cout << " (best " << std::setprecision(6) << *m.similarity << ")";
  std::cout << '\n';
  return 2;
}

int cmd_discover(const Args& a) {
  const auto phrases = discover_phrases(read_file(a.in));
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!a.out.empty() && a.out != "-") {
    file.open(a.out);
    if (!file) throw StorageError("cannot write " + a.out);
    out = &file;
  }
  for (const auto& p : phrases) *out << p << '\n';
  return 0;
}

int cmd_eval(const Args& a) {
  const auto index = open_index(a);
  Vocabulary all;
  if (!a.model_path.empty()) {
    all = load_model(a.model_path).classes;
  } else {
    // Without a model, evaluate every predicted label present in the index.
    for (const auto& [label, n] : index->stats().per_class_counts) all.add(label, Dataset::kCustom);
  }
  const Vocabulary classes = select_classes(a.classes, all);
  const auto report = compare_references(*index, classes.classes(), a.k);
  if (a.out.empty() || a.out == "-") {
    write_divergence_csv(std::cout, report);
  } else {
    write_divergence_csv(fs::path(a.out), report);
  }
  if (report.mean_abs_delta)
    std::cerr << "mean |p_human - p_query| " << std::setprecision(4) << *report.mean_abs_delta << '\n';
  std::cerr << report.undefined_classes.size() << " class(es) undefined\n";
  return 0;
}

HttpServer* g_server = nullptr;

int cmd_serve(const Args& a) {
  const auto cfg = a.config.empty() ? ServiceConfig{} : ServiceConfig::load(a.config);
  auto service = build_service(cfg);
  HttpServer server(*service, cfg.host, cfg.port);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  server.run();
  g_server = nullptr;
  return 0;
}

int cmd_synth(const Args& a) {
  SynthOptions opts;
  opts.seed = a.seed;
  opts.clips_per_class = a.clips;
  auto classes = default_synth_classes();
  if (a.held_out) classes = {held_out_synth_class()};
  const auto corpus = write_synthetic_corpus(a.out, classes, opts);
  if (!a.embeddings.empty()) write_synthetic_embeddings(a.embeddings);
  std::cerr << corpus.rows.size() << " clips written to " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nels: sound event indexing of web media"};
  app.require_subcommand(1);
  Args a;

  auto* crawl = app.add_subcommand("crawl", "Crawl a media source; index the results when --model is given");
  crawl->add_option("--labels", a.labels, "Label file (one per line) or 'all'");
  crawl->add_option("--source", a.source, "local:<dir> or http:<url>")->required();
  crawl->add_option("--limit", a.limit, "Media per label")->check(CLI::PositiveNumber);
  crawl->add_option("--workers", a.workers)->check(CLI::PositiveNumber);
  crawl->add_option("--model", a.model_path, "Classifier; enables indexing");
  crawl->add_option("--index", a.index_path, "Index log");
  crawl->add_option("--audioset-labels", a.audioset_csv, "AudioSet class_labels_indices.csv");

  auto* features = app.add_subcommand("features", "Write log-mel matrices for every segment of a WAV file");
  features->add_option("audio", a.audio_file)->required()->check(CLI::ExistingFile);
  features->add_option("--out", a.out, "Matrix file ('-' for stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train a classifier from a manifest");
  train_cmd->add_option("--manifest", a.manifest)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", a.out)->required();
  train_cmd->add_option("--seed", a.seed);
  train_cmd->add_option("--epochs", a.epochs)->check(CLI::PositiveNumber);
  train_cmd->add_option("--holdout-fold", a.holdout_fold, "Fold kept out of training and reported");

  auto* selftrain = app.add_subcommand("selftrain", "Self-train a model on an unlabeled pool of WAV files");
  selftrain->add_option("--model", a.model_path)->required()->check(CLI::ExistingFile);
  selftrain->add_option("--pool", a.pool_dir)->required()->check(CLI::ExistingDirectory);
  selftrain->add_option("--manifest", a.manifest, "Labeled base set")->required()->check(CLI::ExistingFile);
  selftrain->add_option("--eval-fold", a.eval_fold, "Manifest fold used as the evaluation split")->required();
  selftrain->add_option("--rounds", a.rounds)->check(CLI::PositiveNumber);
  selftrain->add_option("--patience", a.patience)->check(CLI::PositiveNumber);
  selftrain->add_option("--tau", a.tau);
  selftrain->add_option("--out", a.out, "Output model (default: overwrite --model)");

  auto* index_cmd = app.add_subcommand("index", "Inspect or maintain the content index");
  index_cmd->add_option("--index", a.index_path);
  index_cmd->require_subcommand(1);
  auto* stats = index_cmd->add_subcommand("stats", "Print index statistics");
  auto* topk = index_cmd->add_subcommand("topk", "List the top-k segments of a class");
  topk->add_option("--class", a.klass)->required();
  topk->add_option("--k", a.k)->check(CLI::PositiveNumber);
  auto* compact = index_cmd->add_subcommand("compact", "Rewrite the log with one record per entry");

  auto* map = app.add_subcommand("map", "Map a text query to a sound class");
  map->add_option("--query", a.query)->required();
  map->add_option("--embeddings", a.embeddings)->required()->check(CLI::ExistingFile);
  map->add_option("--model", a.model_path, "Use the model's classes instead of the shipped vocabulary");

  auto* discover = app.add_subcommand("discover", "Extract candidate sound labels from text");
  discover->add_option("--in", a.in)->required()->check(CLI::ExistingFile);
  discover->add_option("--out", a.out);

  auto* eval = app.add_subcommand("eval", "Precision at k under human and query references");
  eval->add_option("--k", a.k)->check(CLI::PositiveNumber);
  eval->add_option("--classes", a.classes, "Label file or 'all'");
  eval->add_option("--out", a.out, "CSV report ('-' for stdout)");
  eval->add_option("--index", a.index_path);
  eval->add_option("--model", a.model_path, "Class list source");

  auto* serve = app.add_subcommand("serve", "Run the HTTP search service");
  serve->add_option("--config", a.config)->check(CLI::ExistingFile);

  auto* synth = app.add_subcommand("synth", "Write a synthetic tone/noise corpus");
  synth->add_option("--out", a.out)->required();
  synth->add_option("--clips", a.clips)->check(CLI::PositiveNumber);
  synth->add_option("--seed", a.seed);
  synth->add_option("--embeddings", a.embeddings, "Also write a matching word-vector file");
  synth->add_flag("--held-out", a.held_out, "Generate only the held-out sweep class");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*crawl) return cmd_crawl(a);
    if (*features) return cmd_features(a);
    if (*train_cmd) return cmd_train(a);
    if (*selftrain) return cmd_selftrain(a);
    if (*stats) return cmd_index_stats(a);
    if (*topk) return cmd_index_topk(a);
    if (*compact) return cmd_index_compact(a);
    if (*map) return cmd_map(a);
    if (*discover) return cmd_discover(a);
    if (*eval) return cmd_eval(a);
    if (*serve) return cmd_serve(a);
    if (*synth) return cmd_synth(a);
  } catch (const std::exception& e) {
    std::cerr << "nels: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
