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

#include "nels/query_mapper.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "nels/errors.h"

namespace nels {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

const std::set<std::string, std::less<>> kStopWords = {"that", "which", "and", "or",   "as",   "in",
                                                       "on",   "at",    "from", "with", "when", "while"};
const std::set<std::string, std::less<>> kLeadingDeterminers = {"the", "a",   "an",  "my", "our",
                                                                "their", "his", "her", "its"};
const std::set<std::string, std::less<>> kPronouns = {"it", "he", "she", "they", "them", "this", "those"};

constexpr std::size_t kMaxPhraseWords = 4;

struct Token {
  std::string text;  // lowercased for words
  bool word = false;
};

bool word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

// Words keep inner apostrophes and hyphens ("children's", "ice-cream");
// any other visible character is a punctuation token.
std::vector<Token> scan(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (word_char(c)) {
      std::string w;
      while (i < text.size()) {
        const auto d = static_cast<unsigned char>(text[i]);
        const bool joiner = (d == '\'' || d == '-') && i + 1 < text.size() &&
                            word_char(static_cast<unsigned char>(text[i + 1])) && !w.empty();
        if (!word_char(d) && !joiner) break;
        w.push_back(static_cast<char>(std::tolower(d)));
        ++i;
      }
      out.push_back({std::move(w), true});
    } else {
      out.push_back({std::string(1, static_cast<char>(c)), false});
      ++i;
    }
  }
  return out;
}

}  // namespace

bool EmbeddingVocabulary::add(std::string_view token, std::vector<double> vector) {
  if (dimension_ == 0) dimension_ = vector.size();
  if (vector.size() != dimension_ || dimension_ == 0)
    throw ContractViolation("embedding dimension mismatch for token '" + std::string(token) + "'");
  auto [it, inserted] = vectors_.insert_or_assign(lower(token), std::move(vector));
  if (!inserted) ++duplicates_;
  return inserted;
}

const std::vector<double>* EmbeddingVocabulary::find(std::string_view token) const {
  auto it = vectors_.find(std::string(token));
  return it == vectors_.end() ? nullptr : &it->second;
}

EmbeddingVocabulary read_embeddings(std::istream& in) {
  EmbeddingVocabulary vocab;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> v;
    for (std::string num; ss >> num;) {
      char* end = nullptr;
      const double x = std::strtod(num.c_str(), &end);
      if (end == num.c_str() || *end != '\0') throw ParseError(lineno, "bad number '" + num + "'");
      v.push_back(x);
    }
    if (v.empty()) throw ParseError(lineno, "token '" + token + "' has no vector");
    if (vocab.dimension() != 0 && v.size() != vocab.dimension())
      throw ParseError(lineno, "expected " + std::to_string(vocab.dimension()) + " values, got " +
                                   std::to_string(v.size()));
    vocab.add(token, std::move(v));
  }
  return vocab;
}

EmbeddingVocabulary load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embeddings: " + path.string());
  return read_embeddings(in);
}

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (unsigned char c : text) {
    if (c == '_' || c == '-') {
      clean.push_back(' ');
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      clean.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  std::vector<std::string> out;
  std::istringstream ss(clean);
  for (std::string t; ss >> t;) out.push_back(std::move(t));
  return out;
}

std::optional<std::vector<double>> embed_text(const EmbeddingVocabulary& vocab, std::string_view text) {
  std::vector<double> sum(vocab.dimension(), 0.0);
  std::size_t n = 0;
  for (const auto& tok : normalize_tokens(text)) {
    if (const auto* v = vocab.find(tok)) {
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += (*v)[j];
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  if (n > 1)
    for (auto& x : sum) x /= double(n);
  return sum;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("cosine similarity of vectors of different length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw UndefinedSimilarityError("cosine similarity with a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

QueryMapper::QueryMapper(std::shared_ptr<const EmbeddingVocabulary> vocab, Vocabulary classes, double threshold)
    : vocab_(std::move(vocab)), classes_(std::move(classes)), threshold_(threshold) {
  if (!vocab_) throw ConfigError("query mapper needs an embedding vocabulary");
  for (const auto& c : classes_.classes()) {
    auto v = embed_text(*vocab_, c.label);
    if (!v) continue;
    if (std::all_of(v->begin(), v->end(), [](double x) { return x == 0.0; })) continue;
    class_vectors_.emplace_back(c.class_id, std::move(*v));
  }
}

QueryMapping QueryMapper::map(std::string_view query) const {
  QueryMapping out;
  out.query = std::string(query);
  const auto q = embed_text(*vocab_, query);
  if (!q || std::all_of(q->begin(), q->end(), [](double x) { return x == 0.0; })) return out;

  const SoundClass* best = nullptr;
  double best_sim = 0.0;
  for (const auto& [id, vec] : class_vectors_) {
    const double s = cosine_similarity(*q, vec);
    const SoundClass& c = classes_.at(id);
    if (!best || s > best_sim || (s == best_sim && c.label < best->label)) {
      best = &c;
      best_sim = s;
    }
  }
  if (!best) return out;
  out.similarity = best_sim;
  if (best_sim >= threshold_) out.matched_class = *best;
  return out;
}

QueryMapping map_query(const EmbeddingVocabulary& vocab, const Vocabulary& classes, std::string_view query) {
  // Non-owning view; the mapper does not outlive this call.
  std::shared_ptr<const EmbeddingVocabulary> view(&vocab, [](const EmbeddingVocabulary*) {});
  return QueryMapper(view, classes).map(query);
}

std::vector<std::string> discover_phrases(std::string_view text) {
  const auto tokens = scan(text);
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (!tokens[i].word || (tokens[i].text != "sound" && tokens[i].text != "sounds")) continue;
    if (!tokens[i + 1].word || tokens[i + 1].text != "of") continue;

    std::size_t j = i + 2;
    while (j < tokens.size() && tokens[j].word && kLeadingDeterminers.contains(tokens[j].text)) ++j;
    std::vector<std::string> phrase;
    while (j < tokens.size() && phrase.size() < kMaxPhraseWords && tokens[j].word &&
           !kStopWords.contains(tokens[j].text)) {
      phrase.push_back(tokens[j].text);
      ++j;
    }
    if (phrase.empty() || kPronouns.contains(phrase.front())) continue;

    std::string joined;
    for (const auto& w : phrase) {
      if (!joined.empty()) joined.push_back(' ');
      joined += w;
    }
    if (seen.insert(joined).second) out.push_back(std::move(joined));
  }
  return out;
}

}  // namespace nels
