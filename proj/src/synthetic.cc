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

#include "nels/synthetic.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>

#include "nels/audio.h"
#include "nels/crawler.h"
#include "nels/errors.h"

namespace nels {

namespace {

std::string slug(const std::string& label) {
  std::string out;
  for (char c : label) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

}  // namespace

std::vector<SynthClass> default_synth_classes() {
  return {{"low tone", SynthKind::kTone, 440.0, 0.0},
          {"mid tone", SynthKind::kTone, 1000.0, 0.0},
          {"high tone", SynthKind::kTone, 3000.0, 0.0},
          {"white noise", SynthKind::kNoise, 0.0, 0.0}};
}

SynthClass held_out_synth_class() { return {"rising sweep", SynthKind::kSweep, 500.0, 8000.0}; }

DecodedAudio synth_clip(const SynthClass& cls, double seconds, const SynthOptions& options, std::mt19937_64& rng) {
  const int sr = kCanonicalSampleRate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * sr));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> amp_dist(0.3, 0.8);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  const double amp = amp_dist(rng);
  const double jitter = 1.0 + options.freq_jitter * unit(rng);
  const double phase = phase_dist(rng);

  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = double(i) / sr;
    double v = 0.0;
    switch (cls.kind) {
      case SynthKind::kTone:
        v = amp * std::sin(2.0 * std::numbers::pi * cls.freq_hz * jitter * t + phase);
        break;
      case SynthKind::kNoise:
        v = 0.5 * amp * unit(rng);
        break;
      case SynthKind::kSweep: {
        const double rate = (cls.freq_end_hz - cls.freq_hz) / seconds;
        v = amp * std::sin(2.0 * std::numbers::pi * (cls.freq_hz * jitter * t + 0.5 * rate * t * t) + phase);
        break;
      }
    }
    if (cls.kind != SynthKind::kNoise) v += options.noise_amplitude * unit(rng);
    x[i] = std::clamp(v, -1.0, 1.0);
  }
  return DecodedAudio{sr, {std::move(x)}};
}

SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& dir, const std::vector<SynthClass>& classes,
                                       const SynthOptions& options) {
  if (options.folds < 1 || options.min_seconds <= 0 || options.max_seconds < options.min_seconds)
    throw ConfigError("bad synthetic corpus options");
  std::filesystem::create_directories(dir);
  SyntheticCorpus corpus;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> dur(options.min_seconds, options.max_seconds);

  for (const auto& cls : classes) {
    corpus.classes.add(cls.label, Dataset::kCustom);
    for (std::size_t i = 0; i < options.clips_per_class; ++i) {
      char id[128];
      std::snprintf(id, sizeof id, "%s_%03zu", slug(cls.label).c_str(), i);
      // Whole milliseconds keep the sidecar duration exact.
      const double seconds = std::round(dur(rng) * 1000.0) / 1000.0;
      const auto audio = synth_clip(cls, seconds, options, rng);
      const auto wav = dir / (std::string(id) + ".wav");
      write_wav_pcm16(wav, audio);

      char dstr[32];
      std::snprintf(dstr, sizeof dstr, "%.3f", seconds);
      write_sidecar(dir / (std::string(id) + ".meta"),
                    {{"media_id", id},
                     {"url", std::string("local:") + id},
                     {"title", cls.label + " recording " + std::to_string(i)},
                     {"description", "Synthetic " + cls.label + " sound"},
                     {"duration_s", dstr},
                     {"upload_date", "2024-01-01"},
                     {"uploader", "synth"},
                     {"category", "Test"},
                     {"keywords", cls.label + ",synthetic"}});
      corpus.rows.push_back({wav, cls.label, Dataset::kCustom, std::to_string(int(i % options.folds) + 1)});
    }
  }
  corpus.manifest = dir / "manifest.csv";
  write_manifest(corpus.manifest, corpus.rows);
  return corpus;
}

void write_synthetic_embeddings(const std::filesystem::path& path) {
  // Axes: tone low mid high white noise fruit music
  const std::map<std::string, std::vector<double>> table = {
      {"tone", {1, 0, 0, 0, 0, 0, 0, 0}},       {"low", {0, 1, 0, 0, 0, 0, 0, 0}},
      {"mid", {0, 0, 1, 0, 0, 0, 0, 0}},        {"high", {0, 0, 0, 1, 0, 0, 0, 0}},
      {"white", {0, 0, 0, 0, 1, 0, 0, 0}},      {"noise", {0, 0, 0, 0, 0, 1, 0, 0}},
      {"bass", {0.3, 0.9, 0, 0, 0, 0, 0, 0.2}}, {"hiss", {0, 0, 0, 0, 0.3, 0.9, 0, 0}},
      {"beep", {0.8, 0, 0.4, 0.2, 0, 0, 0, 0}}, {"banana", {0, 0, 0, 0, 0, 0, 1, 0}},
      {"guitar", {0, 0, 0, 0, 0, 0, 0.1, 1}},
  };
  std::ofstream out(path);
  if (!out) throw StorageError("cannot write embeddings: " + path.string());
  for (const auto& [token, v] : table) {
    out << token;
    for (double x : v) out << ' ' << x;
    out << '\n';
  }
}

}  // namespace nels
