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
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nels/vocabulary.h"

namespace nels {

// Inclusive cosine-similarity floor for mapping a query to a class.
inline constexpr double kSimilarityThreshold = 0.15;

// Token -> vector table in the plain-text "<token> <f1> ... <fD>" format
// used by GloVe. Tokens are lowercased on insertion.
class EmbeddingVocabulary {
 public:
  EmbeddingVocabulary() = default;
  explicit EmbeddingVocabulary(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }
  // Tokens seen more than once while loading (last one wins).
  std::size_t duplicates() const { return duplicates_; }

  // Returns false when the token replaced an earlier vector. Throws
  // ContractViolation on a dimension mismatch.
  bool add(std::string_view token, std::vector<double> vector);
  const std::vector<double>* find(std::string_view token) const;

 private:
  std::size_t dimension_ = 0;
  std::size_t duplicates_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Throws ParseError naming the line when a row's dimension differs from
// the first row's or a value is not a number.
EmbeddingVocabulary load_embeddings(const std::filesystem::path& path);
EmbeddingVocabulary read_embeddings(std::istream& in);

// Lowercase, '_' and '-' as separators, other ASCII punctuation removed,
// split on whitespace.
std::vector<std::string> normalize_tokens(std::string_view text);

// Mean of the in-vocabulary token vectors; nullopt when none is known.
std::optional<std::vector<double>> embed_text(const EmbeddingVocabulary& vocab, std::string_view text);

// Throws UndefinedSimilarityError for a zero vector and ContractViolation on
// a length mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct QueryMapping {
  std::string query;
  std::optional<SoundClass> matched_class;  // set iff similarity >= threshold
  std::optional<double> similarity;         // best similarity found, if any
};

// Maps free text to the closest class label embedding. Class embeddings
// are computed once at construction; classes whose labels are entirely
// out of vocabulary can never match. Immutable and thread-safe.
class QueryMapper {
 public:
  QueryMapper(std::shared_ptr<const EmbeddingVocabulary> vocab, Vocabulary classes,
              double threshold = kSimilarityThreshold);

  QueryMapping map(std::string_view query) const;

  const Vocabulary& classes() const { return classes_; }
  std::size_t matchable_classes() const { return class_vectors_.size(); }

 private:
  std::shared_ptr<const EmbeddingVocabulary> vocab_;
  Vocabulary classes_;
  double threshold_;
  std::vector<std::pair<int, std::vector<double>>> class_vectors_;
};

QueryMapping map_query(const EmbeddingVocabulary& vocab, const Vocabulary& classes, std::string_view query);

// Candidate sound labels from running text: the up-to-four words after
// "sound of"/"sounds of", cut at punctuation or a stop word, with leading
// articles and possessives removed and pronoun-initial phrases rejected.
// Lowercased, de-duplicated, in order of first occurrence.
std::vector<std::string> discover_phrases(std::string_view text);

}  // namespace nels
