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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nels {

enum class Dataset { kEsc50, kUs8k, kTut16, kAudioSet, kCustom };

std::string_view dataset_name(Dataset d);
// Accepts the names produced by dataset_name(), case-insensitively.
std::optional<Dataset> parse_dataset(std::string_view name);

// Number of classes each source dataset contributes to the full vocabulary.
std::size_t dataset_class_count(Dataset d);
// 50 + 10 + 18 + 527.
inline constexpr std::size_t kFullVocabularySize = 605;

struct SoundClass {
  std::string label;
  Dataset dataset = Dataset::kCustom;
  int class_id = -1;

  friend bool operator==(const SoundClass&, const SoundClass&) = default;
};

// An ordered set of sound classes with unique labels and dense ids 0..V-1.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Appends a class and returns its id. A label that collides with an
  // existing one is qualified as "<label> (<dataset>)"; a second collision
  // on the qualified form throws InvalidLabelError.
  int add(std::string label, Dataset dataset);

  std::size_t size() const { return classes_.size(); }
  bool empty() const { return classes_.empty(); }
  const std::vector<SoundClass>& classes() const { return classes_; }
  const SoundClass& at(int class_id) const;

  const SoundClass* find(std::string_view label) const;
  bool contains(std::string_view label) const { return find(label) != nullptr; }

  // Subset in the given label order, re-indexed densely.
  Vocabulary subset(const std::vector<std::string>& labels) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.classes_ == b.classes_;
  }

 private:
  std::vector<SoundClass> classes_;
  std::unordered_map<std::string, int> by_label_;
};

// Class lists shipped with the library. Labels are human readable
// (underscores in the original dataset names become spaces).
std::vector<std::string> esc50_labels();
std::vector<std::string> us8k_labels();
std::vector<std::string> tut16_labels();

// Reads AudioSet's class_labels_indices.csv ("index,mid,display_name").
std::vector<std::string> load_audioset_labels(const std::filesystem::path& csv);

// ESC-50, US8K and TUT16 always; AudioSet when a label CSV is supplied.
Vocabulary builtin_vocabulary(const std::optional<std::filesystem::path>& audioset_csv = std::nullopt);

// "label,dataset" CSV with a header row.
Vocabulary load_vocabulary_csv(const std::filesystem::path& path);
void save_vocabulary_csv(const Vocabulary& vocab, const std::filesystem::path& path);

}  // namespace nels
