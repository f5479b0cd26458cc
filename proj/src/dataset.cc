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

#include "nels/dataset.h"

#include <fstream>

#include "nels/audio.h"
#include "nels/csv.h"
#include "nels/errors.h"
#include "nels/features.h"
#include "nels/wav.h"

namespace nels {

std::vector<ManifestRow> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ManifestError("cannot open manifest: " + manifest.string());
  const auto base = manifest.parent_path();
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || *header != std::vector<std::string>{"path", "label", "dataset", "fold"})
    throw ManifestError(manifest.string() + ": header must be 'path,label,dataset,fold'");

  std::vector<ManifestRow> rows;
  while (auto rec = reader.next()) {
    if (rec->size() == 1 && rec->front().empty()) continue;
    const std::string where = manifest.string() + ":" + std::to_string(reader.line());
    if (rec->size() != 4) throw ManifestError(where + ": expected 4 fields");
    auto ds = parse_dataset((*rec)[2]);
    if (!ds) throw ManifestError(where + ": unknown dataset '" + (*rec)[2] + "'");
    if ((*rec)[1].empty()) throw ManifestError(where + ": empty label");
    std::filesystem::path p = (*rec)[0];
    rows.push_back({p.is_absolute() ? p : base / p, (*rec)[1], *ds, (*rec)[3]});
  }
  return rows;
}

void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestRow>& rows) {
  std::ofstream out(manifest);
  if (!out) throw StorageError("cannot write manifest: " + manifest.string());
  const auto base = manifest.parent_path();
  out << "path,label,dataset,fold\n";
  for (const auto& r : rows) {
    auto rel = r.path.lexically_relative(base);
    out << csv::join({(rel.empty() ? r.path : rel).generic_string(), r.label,
                      std::string(dataset_name(r.dataset)), r.fold})
        << '\n';
  }
}

Vocabulary manifest_classes(const std::vector<ManifestRow>& rows, const Vocabulary* vocabulary) {
  Vocabulary out;
  for (const auto& r : rows) {
    if (out.contains(r.label)) continue;
    if (vocabulary) {
      const SoundClass* c = vocabulary->find(r.label);
      if (!c) throw ManifestError("label not in the active vocabulary: " + r.label);
      out.add(c->label, c->dataset);
    } else {
      out.add(r.label, r.dataset);
    }
  }
  return out;
}

std::vector<PooledFeatures> pooled_segments_of(const std::filesystem::path& audio_file) {
  const Waveform w = canonicalize_audio(read_wav(audio_file));
  std::vector<PooledFeatures> out;
  for (const auto& seg : segment_waveform(w, audio_file.stem().string()))
    out.push_back(pool_features(log_mel_features(seg)));
  return out;
}

std::vector<LabeledExample> load_examples(const std::vector<ManifestRow>& rows, const Vocabulary& classes) {
  std::vector<LabeledExample> out;
  for (const auto& r : rows) {
    const SoundClass* c = classes.find(r.label);
    if (!c) throw ManifestError("label not in the class list: " + r.label);
    for (auto& pooled : pooled_segments_of(r.path)) out.push_back({std::move(pooled), c->class_id});
  }
  return out;
}

}  // namespace nels
