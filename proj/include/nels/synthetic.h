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

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nels/dataset.h"
#include "nels/vocabulary.h"
#include "nels/wav.h"

namespace nels {

enum class SynthKind { kTone, kNoise, kSweep };

struct SynthClass {
  std::string label;
  SynthKind kind = SynthKind::kTone;
  double freq_hz = 0.0;  // tone frequency, or sweep start
  double freq_end_hz = 0.0;  // sweep end
};

// Tones at 440, 1000 and 3000 Hz plus white noise.
std::vector<SynthClass> default_synth_classes();
// A 500 -> 8000 Hz linear sweep, kept out of the default set.
SynthClass held_out_synth_class();

struct SynthOptions {
  std::uint64_t seed = 2024;
  std::size_t clips_per_class = 50;
  double min_seconds = 2.3;
  double max_seconds = 4.6;
  double freq_jitter = 0.02;     // relative
  double noise_amplitude = 0.02;  // background noise under tones
  int folds = 5;
};

// One clip of `seconds` at 44.1 kHz. Amplitude and pitch are drawn from rng.
DecodedAudio synth_clip(const SynthClass& cls, double seconds, const SynthOptions& options, std::mt19937_64& rng);

struct SyntheticCorpus {
  Vocabulary classes;  // CUSTOM dataset, in generation order
  std::vector<ManifestRow> rows;
  std::filesystem::path manifest;  // <dir>/manifest.csv
};

// Writes <media_id>.wav and <media_id>.meta for every clip, plus
// manifest.csv. Clips are assigned to folds 1..folds round-robin per class.
// Same options, same bytes.
SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& dir, const std::vector<SynthClass>& classes,
                                       const SynthOptions& options = {});

// Small word-vector table covering the default synthetic labels plus a few
// related and unrelated words, in the plain-text embedding format.
void write_synthetic_embeddings(const std::filesystem::path& path);

}  // namespace nels
