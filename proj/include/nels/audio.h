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
#include <string>
#include <vector>

#include "nels/wav.h"

namespace nels {

inline constexpr int kCanonicalSampleRate = 44100;
inline constexpr double kSegmentSeconds = 2.3;
// round(2.3 * 44100)
inline constexpr std::size_t kSegmentSamples = 101430;
// A trailing remainder of at least half a segment (1.15 s) is kept, padded.
inline constexpr std::size_t kMinTailSamples = kSegmentSamples / 2;

// Mono waveform. Canonical when sample_rate == 44100 and every sample is in
// [-1, 1]; the 16-bit quantization happens when the waveform is encoded.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? double(samples.size()) / sample_rate : 0.0;
  }
};

// Band-limited windowed-sinc resampler (Kaiser window). Coefficients for the
// rational ratio out/in are precomputed per phase, so one instance can be
// reused across calls and threads.
class Resampler {
 public:
  Resampler(int in_rate, int out_rate, int zero_crossings = 16, double kaiser_beta = 8.6);

  std::vector<double> process(const std::vector<double>& in) const;
  std::size_t output_length(std::size_t input_length) const;

 private:
  double tap(double x) const;

  int in_rate_;
  int out_rate_;
  long long up_;    // out / gcd
  long long down_;  // in / gcd
  double cutoff_;   // relative to the input Nyquist
  double half_width_;
  int taps_per_side_;
  double beta_;
  double i0_beta_;
  std::vector<double> table_;  // up_ rows of 2*taps_per_side_ weights, or empty
};

// Mixes to mono by channel mean, resamples to 44.1 kHz and clamps to [-1, 1].
// Mono 44.1 kHz input in range passes through bit-identical.
Waveform canonicalize_audio(const DecodedAudio& raw);

DecodedAudio to_decoded(const Waveform& w);

struct AudioSegment {
  std::string segment_id;  // "<media_id>#<index>"
  std::string media_id;
  std::size_t index = 0;
  double offset_s = 0.0;
  double duration_s = kSegmentSeconds;
  std::size_t valid_samples = 0;  // samples taken from the source, rest is padding
  std::vector<double> samples;    // always kSegmentSamples long
};

std::string make_segment_id(const std::string& media_id, std::size_t index);

// Number of segments segment_waveform() produces for a clip of n samples.
std::size_t segment_count(std::size_t n_samples);

// Consecutive non-overlapping 2.3 s windows. A trailing remainder of at
// least 1.15 s is zero-padded into a final segment; a clip shorter than one
// segment becomes exactly one padded segment.
std::vector<AudioSegment> segment_waveform(const Waveform& w, const std::string& media_id);

}  // namespace nels
