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
#include <optional>
#include <string>
#include <vector>

#include "nels/content_index.h"
#include "nels/vocabulary.h"

namespace nels {

inline constexpr std::size_t kDefaultEvalK = 40;

enum class Reference { kHuman, kQuery };

struct PrecisionReport {
  SoundClass sound_class;
  std::size_t k = kDefaultEvalK;
  Reference reference = Reference::kQuery;
  std::size_t judged = 0;
  std::size_t correct = 0;
  std::optional<double> precision;  // undefined when nothing was judged
};

// Human verdict on one entry: nullopt when unvoted, otherwise a strict
// majority of Correct votes (ties count as incorrect).
std::optional<bool> human_judgment(const IndexEntry& e);

// Scores the k highest-confidence entries predicted as `cls`. Throws
// InvalidInputError when k is zero.
PrecisionReport precision_at_k(const ContentIndex& index, const SoundClass& cls, std::size_t k,
                               Reference reference);

struct ClassDivergence {
  SoundClass sound_class;
  std::size_t judged = 0;  // human-judged segments
  std::optional<double> p_human;
  std::optional<double> p_query;
  std::optional<double> delta;  // |p_human - p_query| when both are defined
};

struct DivergenceReport {
  std::size_t k = kDefaultEvalK;
  std::vector<ClassDivergence> per_class;
  std::optional<double> mean_abs_delta;
  std::vector<std::string> undefined_classes;
};

// Both precisions are computed from one snapshot of the index.
DivergenceReport compare_references(const ContentIndex& index, const std::vector<SoundClass>& classes,
                                    std::size_t k = kDefaultEvalK);

// CSV with header class,k,p_human,judged,p_query,delta; undefined values
// are empty fields.
void write_divergence_csv(std::ostream& out, const DivergenceReport& report);
void write_divergence_csv(const std::filesystem::path& path, const DivergenceReport& report);

}  // namespace nels
