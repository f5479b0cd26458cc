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

#include "nels/audio.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "nels/errors.h"

namespace nels {

namespace {

// Precomputing more phases than this costs more memory than it saves.
constexpr long long kMaxTablePhases = 8192;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

Resampler::Resampler(int in_rate, int out_rate, int zero_crossings, double kaiser_beta)
    : in_rate_(in_rate), out_rate_(out_rate), beta_(kaiser_beta) {
  if (in_rate <= 0 || out_rate <= 0) throw InvalidAudioError("sample rates must be positive");
  if (zero_crossings < 1) throw ConfigError("resampler needs at least one zero crossing");
  const long long g = std::gcd(in_rate, out_rate);
  up_ = out_rate / g;
  down_ = in_rate / g;
  cutoff_ = std::min(1.0, double(out_rate) / double(in_rate));
  half_width_ = zero_crossings / cutoff_;
  taps_per_side_ = static_cast<int>(std::ceil(half_width_));
  i0_beta_ = std::cyl_bessel_i(0.0, beta_);

  if (up_ <= kMaxTablePhases) {
    const int width = 2 * taps_per_side_;
    table_.resize(std::size_t(up_) * std::size_t(width));
    for (long long p = 0; p < up_; ++p) {
      const double frac = double(p) / double(up_);
      double* row = &table_[std::size_t(p) * std::size_t(width)];
      double sum = 0.0;
      for (int j = 0; j < width; ++j) {
        const int k = j - taps_per_side_ + 1;
        row[j] = tap(double(k) - frac);
        sum += row[j];
      }
      // Unity DC gain for every phase.
      for (int j = 0; j < width; ++j) row[j] /= sum;
    }
  }
}

double Resampler::tap(double x) const {
  const double r = x / half_width_;
  if (std::abs(r) >= 1.0) return 0.0;
  const double window = std::cyl_bessel_i(0.0, beta_ * std::sqrt(1.0 - r * r)) / i0_beta_;
  return cutoff_ * sinc(cutoff_ * x) * window;
}

std::size_t Resampler::output_length(std::size_t n) const {
  return static_cast<std::size_t>(std::llround(double(n) * double(up_) / double(down_)));
}

std::vector<double> Resampler::process(const std::vector<double>& in) const {
  if (up_ == down_) return in;
  const std::size_t n_out = output_length(in.size());
  const long long n_in = static_cast<long long>(in.size());
  const int width = 2 * taps_per_side_;
  std::vector<double> out(n_out);
  std::vector<double> scratch;
  if (table_.empty()) scratch.resize(std::size_t(width));

  for (std::size_t n = 0; n < n_out; ++n) {
    const long long num = static_cast<long long>(n) * down_;
    const long long base = num / up_;
    const long long phase = num % up_;
    const double* w;
    if (!table_.empty()) {
      w = &table_[std::size_t(phase) * std::size_t(width)];
    } else {
      const double frac = double(phase) / double(up_);
      double sum = 0.0;
      for (int j = 0; j < width; ++j) {
        scratch[std::size_t(j)] = tap(double(j - taps_per_side_ + 1) - frac);
        sum += scratch[std::size_t(j)];
      }
      for (auto& s : scratch) s /= sum;
      w = scratch.data();
    }
    double acc = 0.0;
    const long long first = base - taps_per_side_ + 1;
    for (int j = 0; j < width; ++j) {
      const long long idx = first + j;
      if (idx >= 0 && idx < n_in) acc += w[j] * in[std::size_t(idx)];
    }
    out[n] = acc;
  }
  return out;
}

Waveform canonicalize_audio(const DecodedAudio& raw) {
  if (raw.channels.empty()) throw InvalidAudioError("audio has no channels");
  if (raw.sample_rate <= 0) throw InvalidAudioError("audio has unknown sample rate");
  const std::size_t frames = raw.frames();
  if (frames == 0) throw InvalidAudioError("audio has no samples");
  for (const auto& ch : raw.channels)
    if (ch.size() != frames) throw InvalidAudioError("channels differ in length");

  std::vector<double> mono;
  if (raw.channels.size() == 1) {
    mono = raw.channels.front();
  } else {
    mono.assign(frames, 0.0);
    const double n = double(raw.channels.size());
    for (std::size_t i = 0; i < frames; ++i) {
      double s = 0.0;
      for (const auto& ch : raw.channels) s += ch[i];
      mono[i] = s / n;
    }
  }

  Waveform w;
  w.sample_rate = kCanonicalSampleRate;
  if (raw.sample_rate == kCanonicalSampleRate) {
    w.samples = std::move(mono);
  } else {
    w.samples = Resampler(raw.sample_rate, kCanonicalSampleRate).process(mono);
  }
  for (auto& s : w.samples) {
    if (!std::isfinite(s)) throw InvalidAudioError("audio contains non-finite samples");
    s = std::clamp(s, -1.0, 1.0);
  }
  return w;
}

DecodedAudio to_decoded(const Waveform& w) {
  DecodedAudio d;
  d.sample_rate = w.sample_rate;
  d.channels.push_back(w.samples);
  return d;
}

std::string make_segment_id(const std::string& media_id, std::size_t index) {
  return media_id + "#" + std::to_string(index);
}

std::size_t segment_count(std::size_t n_samples) {
  if (n_samples == 0) return 0;
  const std::size_t full = n_samples / kSegmentSamples;
  if (full == 0) return 1;
  return full + (n_samples % kSegmentSamples >= kMinTailSamples ? 1 : 0);
}

std::vector<AudioSegment> segment_waveform(const Waveform& w, const std::string& media_id) {
  if (w.sample_rate != kCanonicalSampleRate)
    throw ContractViolation("segment_waveform needs 44100 Hz audio, got " +
                            std::to_string(w.sample_rate));
  if (w.samples.empty()) throw ContractViolation("segment_waveform needs a non-empty waveform");

  const std::size_t count = segment_count(w.samples.size());
  std::vector<AudioSegment> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    AudioSegment seg;
    seg.segment_id = make_segment_id(media_id, i);
    seg.media_id = media_id;
    seg.index = i;
    seg.offset_s = double(i) * kSegmentSeconds;
    const std::size_t begin = i * kSegmentSamples;
    const std::size_t end = std::min(begin + kSegmentSamples, w.samples.size());
    seg.valid_samples = end - begin;
    seg.samples.assign(kSegmentSamples, 0.0);
    std::copy(w.samples.begin() + static_cast<std::ptrdiff_t>(begin),
              w.samples.begin() + static_cast<std::ptrdiff_t>(end), seg.samples.begin());
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace nels
