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

#include "nels/vocabulary.h"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "nels/csv.h"
#include "nels/errors.h"

namespace nels {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string humanize(std::string_view raw) {
  std::string out(raw);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::vector<std::string> humanize_all(std::initializer_list<std::string_view> raw) {
  std::vector<std::string> out;
  out.reserve(raw.size());
  for (auto r : raw) out.push_back(humanize(r));
  return out;
}

}  // namespace

std::string_view dataset_name(Dataset d) {
  switch (d) {
    case Dataset::kEsc50: return "ESC50";
    case Dataset::kUs8k: return "US8K";
    case Dataset::kTut16: return "TUT16";
    case Dataset::kAudioSet: return "AUDIOSET";
    case Dataset::kCustom: return "CUSTOM";
  }
  return "CUSTOM";
}

std::optional<Dataset> parse_dataset(std::string_view name) {
  const std::string n = lower(name);
  if (n == "esc50" || n == "esc-50") return Dataset::kEsc50;
  if (n == "us8k" || n == "urbansound8k") return Dataset::kUs8k;
  if (n == "tut16") return Dataset::kTut16;
  if (n == "audioset") return Dataset::kAudioSet;
  if (n == "custom") return Dataset::kCustom;
  return std::nullopt;
}

std::size_t dataset_class_count(Dataset d) {
  switch (d) {
    case Dataset::kEsc50: return 50;
    case Dataset::kUs8k: return 10;
    case Dataset::kTut16: return 18;
    case Dataset::kAudioSet: return 527;
    case Dataset::kCustom: return 0;
  }
  return 0;
}

int Vocabulary::add(std::string label, Dataset dataset) {
  if (label.find_first_not_of(" \t") == std::string::npos)
    throw InvalidLabelError("empty class label");
  if (by_label_.contains(label)) {
    label += " (" + std::string(dataset_name(dataset)) + ")";
    if (by_label_.contains(label)) throw InvalidLabelError("duplicate class label: " + label);
  }
  const int id = static_cast<int>(classes_.size());
  by_label_.emplace(label, id);
  classes_.push_back(SoundClass{std::move(label), dataset, id});
  return id;
}

const SoundClass& Vocabulary::at(int class_id) const {
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= classes_.size())
    throw NotFoundError("class id out of range: " + std::to_string(class_id));
  return classes_[static_cast<std::size_t>(class_id)];
}

const SoundClass* Vocabulary::find(std::string_view label) const {
  auto it = by_label_.find(std::string(label));
  return it == by_label_.end() ? nullptr : &classes_[static_cast<std::size_t>(it->second)];
}

Vocabulary Vocabulary::subset(const std::vector<std::string>& labels) const {
  Vocabulary out;
  for (const auto& l : labels) {
    const SoundClass* c = find(l);
    if (!c) throw InvalidLabelError("label not in vocabulary: " + l);
    out.add(c->label, c->dataset);
  }
  return out;
}

std::vector<std::string> esc50_labels() {
  return humanize_all({
      "dog", "rooster", "pig", "cow", "frog", "cat", "hen", "insects", "sheep", "crow",
      "rain", "sea_waves", "crackling_fire", "crickets", "chirping_birds", "water_drops",
      "wind", "pouring_water", "toilet_flush", "thunderstorm",
      "crying_baby", "sneezing", "clapping", "breathing", "coughing", "footsteps",
      "laughing", "brushing_teeth", "snoring", "drinking_sipping",
      "door_wood_knock", "mouse_click", "keyboard_typing", "door_wood_creaks",
      "can_opening", "washing_machine", "vacuum_cleaner", "clock_alarm", "clock_tick",
      "glass_breaking",
      "helicopter", "chainsaw", "siren", "car_horn", "engine", "train", "church_bells",
      "airplane", "fireworks", "hand_saw",
  });
}

std::vector<std::string> us8k_labels() {
  return humanize_all({
      "air_conditioner", "car_horn", "children_playing", "dog_bark", "drilling",
      "engine_idling", "gun_shot", "jackhammer", "siren", "street_music",
  });
}

std::vector<std::string> tut16_labels() {
  // Home context (11) then residential area (7); "people walking" occurs in both.
  return humanize_all({
      "object_rustling", "object_snapping", "cupboard", "cutlery", "dishes", "drawer",
      "glass_jingling", "object_impact", "people_walking", "washing_dishes",
      "water_tap_running",
      "object_banging", "bird_singing", "car_passing_by", "children_shouting",
      "people_speaking", "people_walking", "wind_blowing",
  });
}

std::vector<std::string> load_audioset_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open AudioSet label file: " + path.string());
  csv::Reader reader(in);
  std::vector<std::string> labels;
  bool header = true;
  while (auto rec = reader.next()) {
    if (header) {
      header = false;
      continue;
    }
    if (rec->size() == 1 && rec->front().empty()) continue;
    if (rec->size() < 3) throw ParseError(reader.line(), "expected index,mid,display_name");
    labels.push_back((*rec)[2]);
  }
  return labels;
}

Vocabulary builtin_vocabulary(const std::optional<std::filesystem::path>& audioset_csv) {
  Vocabulary v;
  for (auto& l : esc50_labels()) v.add(l, Dataset::kEsc50);
  for (auto& l : us8k_labels()) v.add(l, Dataset::kUs8k);
  for (auto& l : tut16_labels()) v.add(l, Dataset::kTut16);
  if (audioset_csv)
    for (auto& l : load_audioset_labels(*audioset_csv)) v.add(l, Dataset::kAudioSet);
  return v;
}

Vocabulary load_vocabulary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vocabulary file: " + path.string());
  csv::Reader reader(in);
  Vocabulary v;
  bool header = true;
  while (auto rec = reader.next()) {
    if (header) {
      header = false;
      continue;
    }
    if (rec->size() == 1 && rec->front().empty()) continue;
    if (rec->size() != 2) throw ParseError(reader.line(), "expected label,dataset");
    auto ds = parse_dataset((*rec)[1]);
    if (!ds) throw ParseError(reader.line(), "unknown dataset '" + (*rec)[1] + "'");
    v.add((*rec)[0], *ds);
  }
  return v;
}

void save_vocabulary_csv(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot write vocabulary file: " + path.string());
  out << "label,dataset\n";
  for (const auto& c : vocab.classes())
    out << csv::join({c.label, std::string(dataset_name(c.dataset))}) << '\n';
}

}  // namespace nels
