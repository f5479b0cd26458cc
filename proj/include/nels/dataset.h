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

#include <filesystem>
#include <string>
#include <vector>

#include "nels/classifier.h"
#include "nels/vocabulary.h"

namespace nels {

// One row of a "path,label,dataset,fold" manifest. `path` is already
// resolved against the manifest's directory.
struct ManifestRow {
  std::filesystem::path path;
  std::string label;
  Dataset dataset = Dataset::kCustom;
  std::string fold;
};

// Throws ManifestError on a bad header, row shape or dataset name.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestRow>& rows);

// Active class list for a manifest: labels in first-seen order. When a
// vocabulary is given, every label must be in it (ManifestError otherwise).
Vocabulary manifest_classes(const std::vector<ManifestRow>& rows, const Vocabulary* vocabulary = nullptr);

// Pooled features of every segment of a decoded, canonicalized file.
std::vector<PooledFeatures> pooled_segments_of(const std::filesystem::path& audio_file);

// Every segment of every row becomes one example labelled with its row's class.
std::vector<LabeledExample> load_examples(const std::vector<ManifestRow>& rows, const Vocabulary& classes);

}  // namespace nels
